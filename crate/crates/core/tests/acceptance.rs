//! Acceptance suite. Runs every criterion, prints one line per criterion and
//! fails if any criterion fails.

mod common;

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use hyperdomino::cli::{render_svg, run_command, RenderStyle};
use hyperdomino::harp::{compile_tm, extract_trace, halting_cell, harp_patch, shipped_machines, solve_harp, tm_run, HarpRegion, TuringMachine};
use hyperdomino::heptagrid::geometry::{check_oracle_isomorphism, reflection_patch};
use hyperdomino::heptagrid::{ball, neighbors, TileAddress};
use hyperdomino::mantilla::{flowers_of, grow, mantilla_table, mantilla_tileset, shipped_grammar, FlowerKind};
use hyperdomino::reduction::{
    assemble_reduction, check_nesting, find_candidates, insert_harps, run_reduction, select_trees, shrink_mantilla_report,
    RadiusOutcome,
};
use hyperdomino::tiles::format::{parse_patch, parse_tileset, write_patch, write_tileset};
use hyperdomino::tiles::{
    check_patch, check_patch_with, solve_region, verify_unsat_certificate, KindTag, NeighborCache, Patch, Placement,
    SolveMode, SolveOutcome, TileSet,
};

type Verdict = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

const GROWN_SEEDS: u64 = 20;
const GROWN_RADIUS: usize = 8;

/// Radius-8 patches for seeds 0..20 with their growth times, shared by the
/// criteria that inspect grown mantillas.
fn grown() -> &'static [(u64, Patch, Duration)] {
    static CELL: OnceLock<Vec<(u64, Patch, Duration)>> = OnceLock::new();
    CELL.get_or_init(|| {
        let ts = mantilla_tileset();
        let g = shipped_grammar();
        (0..GROWN_SEEDS)
            .map(|seed| {
                let t = Instant::now();
                let p = grow(&ts, &g, seed, GROWN_RADIUS).expect("growth");
                (seed, p, t.elapsed())
            })
            .collect()
    })
}

fn machine(name: &str) -> TuringMachine {
    shipped_machines().into_iter().find(|(n, _)| *n == name).unwrap().1
}

fn ball_sizes() -> Verdict {
    let t = Instant::now();
    let sizes: Vec<usize> = (0..=3).map(|r| ball(&TileAddress::Center, r).unwrap().len()).collect();
    ensure!(sizes == [1, 8, 29, 85], "ball sizes {:?}", sizes);
    for r in 2..=3 {
        let geo = reflection_patch(r).map_err(|e| e.to_string())?;
        let n = geo.distance.iter().filter(|&&d| d <= r).count();
        ensure!(n == sizes[r], "reflection oracle has {} tiles at radius {}", n, r);
    }
    let mut last = 0;
    for r in 0..=5 {
        last = check_oracle_isomorphism(r)?;
    }
    let el = t.elapsed();
    ensure!(el < Duration::from_secs(10), "took {:?}", el);
    Ok(format!("sizes {:?}, isomorphic to radius 5 ({} tiles), {:.2?}", sizes, last, el))
}

fn tile_table() -> Verdict {
    let t = mantilla_table();
    let centres: Vec<(FlowerKind, Vec<&str>)> =
        t.centres.iter().map(|(k, r)| (*k, r.iter().map(String::as_str).collect())).collect();
    let want_centres = vec![
        (FlowerKind::F, vec!["2", "3̅", "4̅", "5̅", "6"]),
        (FlowerKind::Gl, vec!["6̅", "5̅", "4", "3", "2"]),
        (FlowerKind::Gr, vec!["6", "5", "4", "3̅", "2̅"]),
        (FlowerKind::Eight, vec!["2̅", "3", "4̅", "5", "6̅"]),
    ];
    ensure!(centres == want_centres, "centre rows differ: {:?}", centres);
    use FlowerKind::*;
    let want_cells = [
        (F, "2", "2◦77"),
        (F, "3̅", "1◦3̅"),
        (F, "4̅", "1̅4̅7◦"),
        (F, "5̅", "5̅7◦7"),
        (F, "6", "11◦6"),
        (Gl, "2", "11◦2"),
        (Gl, "3", "37◦7"),
        (Gl, "4", "1◦14"),
        (Gl, "5̅", "5̅◦77"),
        (Gl, "6̅", "6̅6̅7◦"),
        (Gr, "2̅", "12̅2̅◦"),
        (Gr, "3̅", "11◦3̅"),
        (Gr, "4", "47◦7"),
        (Gr, "5", "1◦15"),
        (Gr, "6", "6◦77"),
        (Eight, "2̅", "12̅2̅◦"),
        (Eight, "3", "137◦"),
        (Eight, "4̅", "1̅4̅7◦"),
        (Eight, "5", "157◦"),
        (Eight, "6̅", "6̅6̅7◦"),
    ];
    let cells: Vec<(FlowerKind, &str, &str)> = t.petals.iter().map(|(k, c, p)| (*k, c.as_str(), p.as_str())).collect();
    ensure!(cells == want_cells, "petal cells differ");
    let ts = mantilla_tileset();
    let centres = ts.types.iter().filter(|t| t.kind.is_centre()).count();
    let petals = ts.types.iter().filter(|t| t.kind == KindTag::Petal).count();
    ensure!((ts.types.len(), centres, petals) == (21, 4, 17), "{} tiles, {} centres, {} petals", ts.types.len(), centres, petals);
    Ok("4 centre rows and 20 cells match; 21 tiles = 4 centres + 17 petals".into())
}

fn growth() -> Verdict {
    let ts = mantilla_tileset();
    let core = ball(&TileAddress::Center, GROWN_RADIUS).unwrap();
    let mut slowest = Duration::ZERO;
    for (seed, p, el) in grown() {
        ensure!(*el < Duration::from_secs(60), "seed {} took {:?}", seed, el);
        slowest = slowest.max(*el);
        ensure!(core.iter().all(|a| p.contains(a)), "seed {} misses part of the ball", seed);
        let v = check_patch(&ts, p).unwrap();
        ensure!(v.is_empty(), "seed {}: {} violations, first {}", seed, v.len(), v[0]);
    }
    let out = solve_region(&ts, &common::ball(3), &Patch::new(), 10_000_000, SolveMode::First).unwrap();
    let SolveOutcome::Sat(q) = out else { return Err(format!("Ball(Center,3) not solved: {:?}", out)) };
    ensure!(q.len() == 85 && check_patch(&ts, &q).unwrap().is_empty(), "bad Ball(Center,3) tiling");
    Ok(format!("{} seeds at radius {} clean, slowest {:.2?}; Ball(Center,3) Sat", GROWN_SEEDS, GROWN_RADIUS, slowest))
}

fn flower_taxonomy() -> Verdict {
    let ts = mantilla_tileset();
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for (seed, p, _) in grown() {
        for f in flowers_of(&ts, p).map_err(|e| format!("seed {}: {}", seed, e))? {
            ensure!(!matches!(f.kind, FlowerKind::Seven | FlowerKind::Ten), "seed {}: {} flower at {}", seed, f.kind.name(), f.centre);
            *counts.entry(f.kind.name()).or_default() += 1;
        }
    }
    ensure!(counts.values().sum::<usize>() > 0, "no interior flowers");
    Ok(format!("interior flowers {:?}, none of kind 7 or 10", counts))
}

fn solver_oracle() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let (mut sat, mut unsat) = (0, 0);
    for i in 0..120 {
        let n = rng.gen_range(1..=4);
        let raw = (0..n)
            .map(|_| (std::array::from_fn(|_| rng.gen_range(1..=3)), std::array::from_fn(|_| rng.gen_range(0..8))))
            .collect();
        let ts = common::tileset_from(raw);
        let want = common::exact_count(&ts);
        match solve_region(&ts, &common::ball(1), &Patch::new(), 10_000_000, SolveMode::First).unwrap() {
            SolveOutcome::Sat(_) => {
                ensure!(want > 0, "set {}: solver Sat, enumeration 0", i);
                sat += 1;
            }
            SolveOutcome::Unsat { certificate, .. } => {
                ensure!(want == 0, "set {}: solver Unsat, enumeration {}", i, want);
                ensure!(verify_unsat_certificate(&ts, &common::ball(1), &certificate).unwrap(), "set {}: certificate rejected", i);
                unsat += 1;
            }
            o => return Err(format!("set {}: {:?}", i, o)),
        }
    }
    Ok(format!("120 random sets agree ({} Sat, {} Unsat, all certificates verified)", sat, unsat))
}

/// Counts single-tile replacements that neither break a local match nor
/// change the decoded trace.
fn undetected(m: &TuringMachine, depth: usize) -> (usize, usize) {
    let tiles = compile_tm(m).unwrap();
    let r = HarpRegion::standard(depth);
    let p = harp_patch(m, &r).unwrap();
    let want = extract_trace(&p, &r, m).unwrap();
    let mut cache = NeighborCache::default();
    let (mut tried, mut missed) = (0, 0);
    for pl in p.iter() {
        let mut local: Patch = cache.get(&pl.address).unwrap().clone().iter().filter_map(|n| p.get(n).cloned()).collect();
        for t in &tiles.tileset.types {
            for rot in 0..7u8 {
                if t.id == pl.type_id && rot == pl.rotation {
                    continue;
                }
                tried += 1;
                let mutant = Placement::new(pl.address.clone(), t.id.clone(), rot);
                local.insert(mutant.clone());
                if !check_patch_with(&tiles.tileset, &local, &mut cache).unwrap().is_empty() {
                    continue;
                }
                let mut q = p.clone();
                q.insert(mutant);
                if extract_trace(&q, &r, m).ok().as_ref() == Some(&want) {
                    missed += 1;
                }
            }
        }
    }
    (tried, missed)
}

fn turing_fidelity() -> Verdict {
    let mut solved = 0;
    let mut refuted = 0;
    let mut mutants = 0;
    ensure!(halting_cell(&machine("halting3"), 5).unwrap().is_some(), "halting3 does not halt within 5 steps");
    for (name, m) in shipped_machines() {
        let tiles = compile_tm(&m).unwrap();
        for depth in 1..=10 {
            let r = HarpRegion::standard(depth);
            let halts = halting_cell(&m, depth).unwrap().is_some_and(|(h, k)| h + k < depth);
            match solve_harp(&m, &tiles, &r, 50_000_000).unwrap() {
                SolveOutcome::Sat(p) => {
                    ensure!(!halts, "{} depth {}: tiled although the machine halts inside", name, depth);
                    let got = extract_trace(&p, &r, &m).unwrap();
                    ensure!(got == tm_run(&m, r.capacity()).unwrap(), "{} depth {}: trace differs", name, depth);
                    solved += 1;
                }
                SolveOutcome::Unsat { certificate, .. } => {
                    ensure!(halts, "{} depth {}: Unsat without halting", name, depth);
                    ensure!(verify_unsat_certificate(&tiles.tileset, &r.to_region(), &certificate).unwrap(), "{} depth {}: bad certificate", name, depth);
                    refuted += 1;
                }
                o => return Err(format!("{} depth {}: {:?}", name, depth, o)),
            }
        }
        let depth = (1..=6).rev().find(|&d| harp_patch(&m, &HarpRegion::standard(d)).is_ok()).unwrap();
        let (tried, missed) = undetected(&m, depth);
        ensure!(missed == 0, "{} depth {}: {} of {} mutations undetected", name, depth, missed, tried);
        mutants += tried;
    }
    Ok(format!(
        "5 machines, depths 1..=10: {} tilings decode exactly, {} halting regions refuted; {} mutations all detected",
        solved, refuted, mutants
    ))
}

fn reduction_dichotomy() -> Verdict {
    let mut lines = Vec::new();
    for (name, halting) in [("halting3", true), ("halting4", true), ("writer", false), ("zigzag", false), ("counter", false)] {
        let radii: &[usize] = if halting { &[4, 5, 6, 7] } else { &[4, 5, 6] };
        let rep = run_reduction(name, &machine(name), radii, 0, 12, 10_000_000).map_err(|e| format!("{}: {}", name, e))?;
        let unsat: Vec<_> = rep
            .rows
            .iter()
            .filter_map(|(r, o)| match o {
                RadiusOutcome::Unsat(u) => Some((*r, u)),
                _ => None,
            })
            .collect();
        let consistent = rep.rows.iter().filter(|(_, o)| matches!(o, RadiusOutcome::Consistent { .. })).count();
        ensure!(unsat.is_empty() || consistent == 0, "{} shows both behaviours", name);
        if halting {
            let Some((r, u)) = unsat.first() else { return Err(format!("{}: no Unsat window\n{}", name, rep)) };
            ensure!(unsat.iter().all(|(_, u)| u.verified && u.depth <= 12), "{}: unverified window", name);
            lines.push(format!("{} Unsat at radius {} depth {}", name, r, u.depth));
        } else {
            ensure!(consistent == radii.len(), "{}: not consistent at every radius\n{}", name, rep);
            // the refined patch itself, independently checked
            let p = grow(&mantilla_tileset(), &shipped_grammar(), 0, 5).unwrap();
            let sel = select_trees(&find_candidates(&p).unwrap()).unwrap();
            let q = insert_harps(&p, &sel.selected, &machine(name)).unwrap();
            let ts = assemble_reduction(&machine(name)).unwrap().tileset_for(&q).unwrap();
            ensure!(check_patch(&ts, &q).unwrap().is_empty(), "{}: refined patch has violations", name);
            lines.push(format!("{} consistent at 4,5,6", name));
        }
    }
    Ok(lines.join("; "))
}

fn structure() -> Verdict {
    let ts = mantilla_tileset();
    let (mut pairs, mut interior, mut dense_seeds) = (0, 0, 0);
    for (seed, p, _) in grown().iter().take(10) {
        let cs = find_candidates(p).unwrap();
        let nest = check_nesting(&cs);
        ensure!(nest.ok(), "seed {}: candidates {:?} overlap", seed, nest.offending);
        pairs += nest.pairs;
        let sel = select_trees(&cs).map_err(|e| format!("seed {}: {}", seed, e))?;
        let mut seen = BTreeSet::new();
        for s in &sel.selected {
            ensure!(s.candidate.area.iter().all(|a| seen.insert(a.clone())), "seed {}: selected areas overlap", seed);
        }
        let r = shrink_mantilla_report(p, &sel.selected).map_err(|e| format!("seed {}: {}", seed, e))?;
        // independent checks of density and connectivity
        let g: Vec<TileAddress> = r
            .patch
            .iter()
            .filter(|pl| matches!(ts.get(&pl.type_id).unwrap().kind, KindTag::CentreGl | KindTag::CentreGr))
            .map(|pl| pl.address.clone())
            .collect();
        let near = within(&g, 6);
        ensure!(r.interior.iter().all(|a| near.contains(a)), "seed {}: interior tile far from every G-centre", seed);
        ensure!(connected(&r.interior), "seed {}: shrunk interior disconnected", seed);
        interior += r.interior.len();
        dense_seeds += usize::from(!r.interior.is_empty());
    }
    ensure!(interior > 0, "every shrunk interior is empty");
    Ok(format!(
        "10 seeds: {} candidate pairs nested or disjoint, selected disjoint, {} interior tiles on {} seeds dense and connected",
        pairs, interior, dense_seeds
    ))
}

fn within(sources: &[TileAddress], r: usize) -> BTreeSet<TileAddress> {
    let mut dist: BTreeMap<TileAddress, usize> = sources.iter().map(|a| (a.clone(), 0)).collect();
    let mut q: VecDeque<TileAddress> = sources.iter().cloned().collect();
    while let Some(a) = q.pop_front() {
        let d = dist[&a];
        if d == r {
            continue;
        }
        for n in neighbors(&a).unwrap() {
            if !dist.contains_key(&n) {
                dist.insert(n.clone(), d + 1);
                q.push_back(n);
            }
        }
    }
    dist.into_keys().collect()
}

fn connected(set: &BTreeSet<TileAddress>) -> bool {
    let Some(start) = set.iter().next() else { return true };
    let mut seen = BTreeSet::from([start.clone()]);
    let mut stack = vec![start.clone()];
    while let Some(a) = stack.pop() {
        for n in neighbors(&a).unwrap() {
            if set.contains(&n) && seen.insert(n.clone()) {
                stack.push(n);
            }
        }
    }
    seen.len() == set.len()
}

fn cli_bytes(args: &[&str]) -> Vec<u8> {
    let mut out = Vec::new();
    let code = run_command(std::iter::once("hyperdomino").chain(args.iter().copied()), &mut out, &mut Vec::new());
    assert_eq!(code, 0);
    out
}

fn determinism() -> Verdict {
    let ts = mantilla_tileset();
    let g = shipped_grammar();
    let a = write_patch(&grow(&ts, &g, 17, 6).unwrap());
    ensure!(a == write_patch(&grow(&ts, &g, 17, 6).unwrap()), "growth differs between runs");
    ensure!(cli_bytes(&["gen-mantilla", "--radius", "4", "--seed", "9"]) == cli_bytes(&["gen-mantilla", "--radius", "4", "--seed", "9"]), "CLI output differs");

    let m = machine("zigzag");
    let rep = |s| run_reduction("zigzag", &m, &[4, 5], s, 12, 1_000_000).unwrap().to_string();
    ensure!(rep(3) == rep(3), "reports differ");
    let h3 = |s| run_reduction("halting3", &machine("halting3"), &[5], s, 12, 1_000_000).unwrap().to_string();
    ensure!(h3(0) == h3(0), "Unsat reports differ");

    let keep = ball(&TileAddress::Center, 3).unwrap();
    let small: Patch = grown()[0].1.iter().filter(|pl| keep.contains(&pl.address)).cloned().collect();
    let style = RenderStyle { by_flower: true, ..RenderStyle::default() };
    ensure!(render_svg(&small, &ts, &style).unwrap() == render_svg(&small, &ts, &style).unwrap(), "SVGs differ");

    // round trips
    let p = parse_patch(&a).unwrap();
    ensure!(write_patch(&p) == a, "patch text not reproduced");
    let sel = select_trees(&find_candidates(&p).unwrap()).unwrap();
    let refined = insert_harps(&p, &sel.selected, &m).unwrap();
    ensure!(parse_patch(&write_patch(&refined)).unwrap() == refined, "refined patch does not round-trip");
    let sets: Vec<TileSet> =
        vec![ts.clone(), compile_tm(&m).unwrap().tileset, assemble_reduction(&m).unwrap().base];
    let mut types = 0;
    for s in &sets {
        let text = write_tileset(s);
        let back = parse_tileset(&text).map_err(|e| format!("{}: {}", s.name, e))?;
        ensure!(back == *s && write_tileset(&back) == text, "tile set {} does not round-trip", s.name);
        types += s.types.len();
    }
    Ok(format!("patches, reports, SVGs and CLI output reproducible; 2 patches and 3 tile sets ({} types) round-trip", types))
}

fn main() {
    let criteria: [(&str, fn() -> Verdict); 9] = [
        ("ball sizes and geometric oracle", ball_sizes),
        ("tile table fidelity", tile_table),
        ("mantilla growth at radius 8", growth),
        ("flower taxonomy", flower_taxonomy),
        ("solver against enumeration", solver_oracle),
        ("Turing fidelity", turing_fidelity),
        ("reduction dichotomy", reduction_dichotomy),
        ("selected-tree structure", structure),
        ("determinism and round trip", determinism),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let verdict = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            Err(e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
        });
        let el = t.elapsed();
        match verdict {
            Ok(detail) => println!("criterion {} ({}): PASS [{:.1?}] {}", i + 1, name, el, detail),
            Err(why) => {
                failed += 1;
                println!("criterion {} ({}): FAIL [{:.1?}] {}", i + 1, name, el, why);
            }
        }
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
