//! Command-line front end: argument parsing, file I/O and rendering.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use thiserror::Error;

use crate::harp::{compile_tm, format_trace, shipped_machines, structural_core, tile_count_formula, tm_run, HarpError, TuringMachine};
use crate::heptagrid::{ball, GridError, Region, TileAddress};
use crate::mantilla::{grow, mantilla_tileset, search_grammars, shipped_grammar, MantillaError};
use crate::reduction::{assemble_reduction, run_reduction, RadiusOutcome, ReductionError};
use crate::tiles::format::{parse_patch, parse_tileset, write_patch, write_tileset};
use crate::tiles::{check_patch, solve_region, Patch, SolveMode, SolveOutcome, TileError, TileSet};

mod render;

pub use render::{render_svg, RenderStyle};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("style: {0}")]
    Style(String),
    #[error("{0}")]
    Input(String),
    #[error(transparent)]
    Tiles(#[from] TileError),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Mantilla(#[from] MantillaError),
    #[error(transparent)]
    Harp(#[from] HarpError),
    #[error(transparent)]
    Reduction(#[from] ReductionError),
}

#[derive(Debug, Parser)]
#[command(name = "hyperdomino", version, about = "Wang tilings of the ternary heptagrid")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Grow a mantilla patch around the central tile.
    GenMantilla {
        #[arg(long)]
        radius: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Keep only Ball(Center, radius) instead of the whole grown patch.
        #[arg(long)]
        clip: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List the matching violations of a patch.
    Check {
        patch: PathBuf,
        /// Defaults to the mantilla tiles.
        #[arg(long)]
        tileset: Option<PathBuf>,
        /// Check against the refined tiles of this machine instead.
        #[arg(long)]
        machine: Option<String>,
    },
    /// Tile a ball or a sector tree with the backtracking solver.
    Solve {
        #[arg(long)]
        tileset: Option<PathBuf>,
        /// Ball(Center, N).
        #[arg(long, conflicts_with = "depth")]
        radius: Option<usize>,
        /// Sector tree of sector 0, N levels deep.
        #[arg(long)]
        depth: Option<usize>,
        /// Fixed placements.
        #[arg(long)]
        partial: Option<PathBuf>,
        #[arg(long, default_value_t = 1_000_000)]
        budget: u64,
        /// Count up to N tilings instead of finding one.
        #[arg(long)]
        count: Option<u64>,
        /// Where to write a found tiling.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Where to write an unsatisfiability certificate.
        #[arg(long)]
        certificate: Option<PathBuf>,
    },
    /// Compile a Turing machine into harp tiles.
    CompileTm {
        machine: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a Turing machine and print its configurations.
    RunTm {
        machine: String,
        #[arg(long, default_value_t = 20)]
        steps: usize,
    },
    /// Run the tiling reduction of a machine over several radii.
    Reduce {
        machine: String,
        #[arg(long, default_value_t = 12)]
        max_depth: usize,
        /// Repeatable; defaults to 4 5 6 7.
        #[arg(long)]
        radius: Vec<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1_000_000)]
        budget: u64,
        /// Report file; certificates are written beside it.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Draw a patch in the Poincaré disk as SVG.
    Render {
        patch: PathBuf,
        #[arg(long)]
        tileset: Option<PathBuf>,
        #[arg(long)]
        machine: Option<String>,
        #[arg(long)]
        style: Option<PathBuf>,
        /// Draw only tiles within Ball(Center, N).
        #[arg(long)]
        radius: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Search the sector grammars compatible with the mantilla tiles.
    GrammarSearch {
        #[arg(long, default_value_t = 4)]
        depth: usize,
        #[arg(long, default_value_t = 1_000_000)]
        budget: u64,
        #[arg(long)]
        tileset: Option<PathBuf>,
        /// Where to write the accepted grammar.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.into(), source })
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|source| CliError::Io { path: path.into(), source })
}

fn tileset_arg(path: &Option<PathBuf>) -> Result<TileSet, CliError> {
    match path {
        Some(p) => Ok(parse_tileset(&read(p)?)?),
        None => Ok(mantilla_tileset()),
    }
}

/// A machine file, or the name of a shipped machine when no such file exists.
fn load_machine(arg: &str) -> Result<(String, TuringMachine), CliError> {
    let path = Path::new(arg);
    let name = path.file_stem().and_then(|s| s.to_str()).unwrap_or(arg).to_string();
    if path.is_file() {
        return Ok((name, read(path)?.parse()?));
    }
    shipped_machines()
        .into_iter()
        .find(|(n, _)| *n == name)
        .map(|(n, m)| (n.to_string(), m))
        .ok_or_else(|| CliError::Input(format!("no machine file or shipped machine named {}", arg)))
}

/// Tile set for a patch: a file, the refined tiles of a machine, or the mantilla.
fn tiles_for_patch(tileset: &Option<PathBuf>, machine: &Option<String>, p: &Patch) -> Result<TileSet, CliError> {
    match (tileset, machine) {
        (Some(_), Some(_)) => Err(CliError::Input("give either --tileset or --machine".into())),
        (_, Some(m)) => Ok(assemble_reduction(&load_machine(m)?.1)?.tileset_for(p)?),
        (t, None) => tileset_arg(t),
    }
}

fn emit(out: &mut dyn Write, path: &Option<PathBuf>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => write_file(p, text),
        None => {
            let _ = out.write_all(text.as_bytes());
            Ok(())
        }
    }
}

fn execute(cmd: Command, out: &mut dyn Write) -> Result<(), CliError> {
    match cmd {
        Command::GenMantilla { radius, seed, clip, out: path } => {
            let mut p = grow(&mantilla_tileset(), &shipped_grammar(), seed, radius)?;
            if clip {
                let keep = ball(&TileAddress::Center, radius)?;
                p = p.iter().filter(|pl| keep.contains(&pl.address)).cloned().collect();
            }
            emit(out, &path, &write_patch(&p))?;
            if path.is_some() {
                let _ = writeln!(out, "{} placements", p.len());
            }
        }
        Command::Check { patch, tileset, machine } => {
            let p = parse_patch(&read(&patch)?)?;
            let ts = tiles_for_patch(&tileset, &machine, &p)?;
            let vs = check_patch(&ts, &p)?;
            for v in &vs {
                let _ = writeln!(out, "{}", v);
            }
            let _ = writeln!(out, "{} violations", vs.len());
        }
        Command::Solve { tileset, radius, depth, partial, budget, count, out: path, certificate } => {
            let ts = tileset_arg(&tileset)?;
            let region = match (radius, depth) {
                (Some(r), _) => Region::Ball { center: TileAddress::Center, radius: r },
                (None, Some(d)) => Region::SectorTree { root: TileAddress::sector_root(0), depth: d },
                (None, None) => return Err(CliError::Input("give --radius or --depth".into())),
            };
            let fixed = match &partial {
                Some(f) => parse_patch(&read(f)?)?,
                None => Patch::new(),
            };
            let mode = count.map_or(SolveMode::First, SolveMode::Count);
            match solve_region(&ts, &region, &fixed, budget, mode)? {
                SolveOutcome::Sat(p) => {
                    let _ = writeln!(out, "Sat {} placements", p.len());
                    if let Some(f) = &path {
                        write_file(f, &write_patch(&p))?;
                    }
                }
                SolveOutcome::Count { count, exhausted } => {
                    let _ = writeln!(out, "Count {} exhausted={}", count, exhausted);
                }
                SolveOutcome::Unsat { nodes, certificate: c } => {
                    let _ = writeln!(out, "Unsat nodes={} steps={}", nodes, c.steps.len());
                    if let Some(f) = &certificate {
                        write_file(f, &c.to_text())?;
                    }
                }
                SolveOutcome::Exhausted { budget } => {
                    let _ = writeln!(out, "Exhausted budget={}", budget);
                }
            }
        }
        Command::CompileTm { machine, out: path } => {
            let (name, m) = load_machine(&machine)?;
            let tiles = compile_tm(&m)?;
            emit(out, &path, &write_tileset(&tiles.tileset))?;
            let _ = writeln!(
                out,
                "{}: {} tiles (formula {}), {} role shapes",
                name,
                tiles.tileset.types.len(),
                tile_count_formula(&m),
                structural_core().len()
            );
        }
        Command::RunTm { machine, steps } => {
            let (_, m) = load_machine(&machine)?;
            let _ = out.write_all(format_trace(&tm_run(&m, steps)?).as_bytes());
        }
        Command::Reduce { machine, max_depth, radius, seed, budget, out: path } => {
            let (name, m) = load_machine(&machine)?;
            let radii = if radius.is_empty() { vec![4, 5, 6, 7] } else { radius };
            let report = run_reduction(&name, &m, &radii, seed, max_depth, budget)?;
            let mut text = report.to_string();
            if let Some(f) = &path {
                for (r, o) in &report.rows {
                    if let RadiusOutcome::Unsat(u) = o {
                        let mut cert = f.clone().into_os_string();
                        cert.push(format!(".r{}.cert", r));
                        let cert = PathBuf::from(cert);
                        write_file(&cert, &u.certificate.to_text())?;
                        text += &format!("certificate radius {}: {}\n", r, cert.display());
                    }
                }
                write_file(f, &text)?;
            }
            let _ = out.write_all(text.as_bytes());
        }
        Command::Render { patch, tileset, machine, style, radius, out: path } => {
            let mut p = parse_patch(&read(&patch)?)?;
            if let Some(r) = radius {
                let keep = ball(&TileAddress::Center, r)?;
                p = p.iter().filter(|pl| keep.contains(&pl.address)).cloned().collect();
            }
            let ts = tiles_for_patch(&tileset, &machine, &p)?;
            let style = match &style {
                Some(f) => RenderStyle::from_toml(&read(f)?)?,
                None => RenderStyle::default(),
            };
            emit(out, &path, &render_svg(&p, &ts, &style)?)?;
        }
        Command::GrammarSearch { depth, budget, tileset, out: path } => {
            let ts = tileset_arg(&tileset)?;
            let (_, candidates) = search_grammars(&ts, depth, budget)?;
            let accepted: Vec<_> = candidates.iter().filter(|c| c.accepted).collect();
            for c in &candidates {
                let rules: Vec<String> = c.grammar.to_text().lines().map(str::to_string).collect();
                let verdict = if c.accepted { "accepted" } else { "rejected" };
                let line = format!("{}: {} {}", verdict, rules.join("; "), c.note);
                let _ = writeln!(out, "{}", line.trim_end());
            }
            let _ = writeln!(out, "{} of {} candidates accepted", accepted.len(), candidates.len());
            if let (Some(f), [one]) = (&path, accepted.as_slice()) {
                write_file(f, &one.grammar.to_text())?;
            } else if path.is_some() {
                return Err(CliError::Input(format!("{} grammars accepted, nothing written", accepted.len())));
            }
        }
    }
    Ok(())
}

/// Runs one command line. Returns 0 on success (an Unsat answer included),
/// 1 on domain errors and 2 on usage errors.
pub fn run_command<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let text = e.render().to_string();
            if code == 0 {
                let _ = out.write_all(text.as_bytes());
            } else {
                let _ = err.write_all(text.as_bytes());
            }
            return if code == 0 { 0 } else { 2 };
        }
    };
    match execute(cli.command, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {}", e);
            1
        }
    }
}

#[cfg(test)]
mod tests;
