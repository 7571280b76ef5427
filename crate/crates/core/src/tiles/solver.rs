//! Exhaustive backtracking over a finite region.
//!
//! Every empty cell ranges over all tile types in all distinct rotations.
//! The search keeps, for each empty cell, the set of placements compatible
//! with its placed neighbours, always branches on the cell with the fewest
//! candidates (ties broken by address order) and tries candidates by type id
//! then rotation. Budgets count search-tree nodes.
//!
//! An unsatisfiable answer carries the pre-order list of visited nodes. Each
//! node names the branching cell and how many placements were compatible
//! there, so the refutation can be replayed and checked without the solver.

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;

use super::format::write_tileset;
use super::{check_patch, fnv1a, Patch, Placement, TileError, TileSet, TileType, VertexMark};
use crate::heptagrid::{neighbors, Region, TileAddress};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveMode {
    First,
    /// Count solutions, stopping once the cap is reached.
    Count(u64),
}

#[derive(Debug, Clone, PartialEq)]
pub enum SolveOutcome {
    Sat(Patch),
    /// `exhausted` is true when the whole search space was visited, so the
    /// count is exact.
    Count { count: u64, exhausted: bool },
    Unsat { nodes: u64, certificate: UnsatCertificate },
    Exhausted { budget: u64 },
}

impl SolveOutcome {
    pub fn is_sat(&self) -> bool {
        matches!(self, SolveOutcome::Sat(_))
    }

    pub fn is_unsat(&self) -> bool {
        matches!(self, SolveOutcome::Unsat { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnsatCertificate {
    pub region_digest: u64,
    pub tileset_digest: u64,
    pub partial: Patch,
    /// Pre-order search nodes: (index of the cell in address order, number of
    /// compatible placements). A node with zero placements is a dead end.
    pub steps: Vec<(u32, u32)>,
}

impl UnsatCertificate {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "unsat-certificate v1").unwrap();
        writeln!(out, "region {:016x}", self.region_digest).unwrap();
        writeln!(out, "tileset {:016x}", self.tileset_digest).unwrap();
        writeln!(out, "partial {}", self.partial.len()).unwrap();
        out.push_str(&super::format::write_patch(&self.partial));
        writeln!(out, "steps {}", self.steps.len()).unwrap();
        for (c, k) in &self.steps {
            writeln!(out, "{} {}", c, k).unwrap();
        }
        out
    }

    pub fn from_text(text: &str) -> Result<UnsatCertificate, TileError> {
        let bad = |m: &str| TileError::MalformedCertificate(m.to_string());
        let mut lines = text.lines();
        if lines.next() != Some("unsat-certificate v1") {
            return Err(bad("missing header"));
        }
        let mut hex_field = |name: &str| -> Result<u64, TileError> {
            let l = lines.next().ok_or_else(|| bad("truncated header"))?;
            let v = l
                .strip_prefix(name)
                .and_then(|r| r.strip_prefix(' '))
                .ok_or_else(|| bad("bad header field"))?;
            u64::from_str_radix(v, 16).map_err(|_| bad("bad digest"))
        };
        let region_digest = hex_field("region")?;
        let tileset_digest = hex_field("tileset")?;
        let n: usize = lines
            .next()
            .and_then(|l| l.strip_prefix("partial "))
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| bad("bad partial count"))?;
        let partial_text: Vec<&str> = lines.by_ref().take(n).collect();
        if partial_text.len() != n {
            return Err(bad("truncated partial"));
        }
        let partial = super::format::parse_patch(&partial_text.join("\n"))
            .map_err(|e| TileError::MalformedCertificate(e.to_string()))?;
        let m: usize = lines
            .next()
            .and_then(|l| l.strip_prefix("steps "))
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| bad("bad step count"))?;
        let mut steps = Vec::with_capacity(m);
        for l in lines {
            let (c, k) = l.split_once(' ').ok_or_else(|| bad("bad step"))?;
            steps.push((
                c.parse().map_err(|_| bad("bad step cell"))?,
                k.parse().map_err(|_| bad("bad step count"))?,
            ));
        }
        Ok(UnsatCertificate {
            region_digest,
            tileset_digest,
            partial,
            steps,
        })
    }
}

pub fn region_digest(cells: &[TileAddress]) -> u64 {
    let mut s = String::new();
    for c in cells {
        s.push_str(&c.to_string());
        s.push('\n');
    }
    fnv1a(s.as_bytes())
}

pub fn tileset_digest(ts: &TileSet) -> u64 {
    fnv1a(write_tileset(ts).as_bytes())
}

/// Distinct oriented placements of the tile set: types in id order, then
/// rotations, dropping rotations that reproduce an earlier one.
fn oriented_options(ts: &TileSet) -> Vec<(usize, u8)> {
    let mut order: Vec<usize> = (0..ts.types.len()).collect();
    order.sort_by(|&a, &b| ts.types[a].id.cmp(&ts.types[b].id));
    let mut out = Vec::new();
    for t in order {
        let ty = &ts.types[t];
        let mut seen = Vec::new();
        for r in 0..7u8 {
            let sig: Vec<_> = (0..7).map(|e| (ty.edge_at(r, e), ty.vertex_at(r, e))).collect();
            if !seen.contains(&sig) {
                seen.push(sig);
                out.push((t, r));
            }
        }
    }
    out
}

#[derive(Clone, PartialEq, Eq)]
struct Bits(Vec<u64>);

impl Bits {
    fn full(n: usize) -> Bits {
        let mut v = vec![u64::MAX; n.div_ceil(64)];
        if n % 64 != 0 {
            *v.last_mut().unwrap() = (1u64 << (n % 64)) - 1;
        }
        Bits(v)
    }

    fn empty(n: usize) -> Bits {
        Bits(vec![0; n.div_ceil(64)])
    }

    fn set(&mut self, i: usize) {
        self.0[i / 64] |= 1 << (i % 64);
    }

    fn count(&self) -> u32 {
        self.0.iter().map(|w| w.count_ones()).sum()
    }

    fn and(&self, o: &Bits) -> Bits {
        Bits(self.0.iter().zip(&o.0).map(|(a, b)| a & b).collect())
    }

    fn iter(&self) -> impl Iterator<Item = u32> + '_ {
        self.0.iter().enumerate().flat_map(|(w, &bits)| {
            let mut b = bits;
            std::iter::from_fn(move || {
                if b == 0 {
                    return None;
                }
                let t = b.trailing_zeros();
                b &= b - 1;
                Some(w as u32 * 64 + t)
            })
        })
    }
}

/// Option tables shared by every search over one tile set.
struct Compiled {
    options: Vec<(usize, u8)>,
    colors: Vec<[u32; 7]>,
    marks: Vec<[bool; 7]>,
    /// (edge j, colour, mark at vertex j-1, mark at vertex j) -> options
    by_edge: HashMap<(u8, u32, bool, bool), Bits>,
    none: Bits,
}

impl Compiled {
    fn new(ts: &TileSet) -> Compiled {
        let options = oriented_options(ts);
        let mut intern: HashMap<&super::EdgeColor, u32> = HashMap::new();
        let mut colors = Vec::with_capacity(options.len());
        let mut marks = Vec::with_capacity(options.len());
        for &(t, r) in &options {
            let ty = &ts.types[t];
            let mut c = [0u32; 7];
            let mut m = [false; 7];
            for e in 0..7 {
                let n = intern.len() as u32;
                c[e] = *intern.entry(ty.edge_at(r, e)).or_insert(n);
                m[e] = ty.vertex_at(r, e) == VertexMark::Red;
            }
            colors.push(c);
            marks.push(m);
        }
        let n = options.len();
        let mut by_edge: HashMap<(u8, u32, bool, bool), Bits> = HashMap::new();
        for o in 0..n {
            for j in 0..7 {
                let key = (j as u8, colors[o][j], marks[o][(j + 6) % 7], marks[o][j]);
                by_edge.entry(key).or_insert_with(|| Bits::empty(n)).set(o);
            }
        }
        Compiled {
            options,
            colors,
            marks,
            by_edge,
            none: Bits::empty(n),
        }
    }

    /// Placements of a neighbour, seen through its edge `j`, compatible with
    /// option `o` seen through edge `i`.
    fn compatible(&self, o: u32, i: usize, j: usize) -> &Bits {
        let o = o as usize;
        let key = (
            j as u8,
            self.colors[o][i],
            self.marks[o][i],
            self.marks[o][(i + 6) % 7],
        );
        self.by_edge.get(&key).unwrap_or(&self.none)
    }
}

enum Trail {
    Assign(u32),
    Domain(u32, Bits, u32),
}

struct Search<'a> {
    cells: Vec<TileAddress>,
    nbr: Vec<[Option<(u32, u8)>; 7]>,
    comp: &'a Compiled,
    domain: Vec<Bits>,
    size: Vec<u32>,
    assigned: Vec<Option<u32>>,
    queue: BTreeSet<(u32, u32)>,
    trail: Vec<Trail>,
}

impl<'a> Search<'a> {
    fn new(cells: Vec<TileAddress>, comp: &'a Compiled) -> Result<Search<'a>, TileError> {
        let index: HashMap<&TileAddress, u32> =
            cells.iter().enumerate().map(|(i, a)| (a, i as u32)).collect();
        let mut nbr = Vec::with_capacity(cells.len());
        for a in &cells {
            let na = neighbors(a)?;
            let mut row = [None; 7];
            for (e, b) in na.iter().enumerate() {
                if let Some(&bi) = index.get(b) {
                    let j = neighbors(b)?
                        .iter()
                        .position(|x| x == a)
                        .expect("neighbour relation is symmetric");
                    row[e] = Some((bi, j as u8));
                }
            }
            nbr.push(row);
        }
        let n = comp.options.len();
        let full = Bits::full(n);
        let count = full.count();
        let ncells = cells.len();
        Ok(Search {
            nbr,
            comp,
            domain: vec![full; ncells],
            size: vec![count; ncells],
            assigned: vec![None; ncells],
            queue: (0..ncells as u32).map(|c| (count, c)).collect(),
            trail: Vec::new(),
            cells,
        })
    }

    fn assign(&mut self, cell: u32, o: u32) {
        let c = cell as usize;
        self.queue.remove(&(self.size[c], cell));
        self.assigned[c] = Some(o);
        self.trail.push(Trail::Assign(cell));
        for e in 0..7 {
            let Some((n, j)) = self.nbr[c][e] else { continue };
            let ni = n as usize;
            if self.assigned[ni].is_some() {
                continue;
            }
            let narrowed = self.domain[ni].and(self.comp.compatible(o, e, j as usize));
            if narrowed != self.domain[ni] {
                let new_size = narrowed.count();
                let old = std::mem::replace(&mut self.domain[ni], narrowed);
                self.queue.remove(&(self.size[ni], n));
                self.queue.insert((new_size, n));
                self.trail.push(Trail::Domain(n, old, self.size[ni]));
                self.size[ni] = new_size;
            }
        }
    }

    fn undo_to(&mut self, mark: usize) {
        while self.trail.len() > mark {
            match self.trail.pop().unwrap() {
                Trail::Assign(cell) => {
                    let c = cell as usize;
                    self.assigned[c] = None;
                    self.queue.insert((self.size[c], cell));
                }
                Trail::Domain(cell, old, old_size) => {
                    let c = cell as usize;
                    self.queue.remove(&(self.size[c], cell));
                    self.queue.insert((old_size, cell));
                    self.domain[c] = old;
                    self.size[c] = old_size;
                }
            }
        }
    }

    fn patch(&self, ts: &TileSet) -> Patch {
        self.cells
            .iter()
            .zip(&self.assigned)
            .filter_map(|(a, o)| {
                o.map(|o| {
                    let (t, r) = self.comp.options[o as usize];
                    Placement::new(a.clone(), ts.types[t].id.clone(), r)
                })
            })
            .collect()
    }
}

struct Frame {
    cell: u32,
    options: Vec<u32>,
    next: usize,
    mark: usize,
}

/// Searches for a completion of `partial` over `region`.
pub fn solve_region(
    ts: &TileSet,
    region: &Region,
    partial: &Patch,
    budget: u64,
    mode: SolveMode,
) -> Result<SolveOutcome, TileError> {
    let cells = region.tiles()?;
    let comp = Compiled::new(ts);
    solve_cells(ts, &comp, cells, partial, budget, mode, None)
}

/// Result of [`complete_cells`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Completion {
    Found(Patch),
    Impossible,
    Exhausted,
}

/// Value-order hook: receives the cell address and the candidate options of
/// a search node (as indices into a stable list) and may permute them.
pub type ValueOrder<'a> = &'a mut dyn FnMut(&TileAddress, &mut Vec<u32>);

/// Like [`solve_region`] in first-solution mode, over an explicit cell list
/// and with a caller-chosen value order. No certificate is produced, since a
/// refutation under a custom order does not replay.
pub fn complete_cells(
    ts: &TileSet,
    cells: Vec<TileAddress>,
    partial: &Patch,
    budget: u64,
    order: ValueOrder<'_>,
) -> Result<Completion, TileError> {
    let comp = Compiled::new(ts);
    Ok(match solve_cells(ts, &comp, cells, partial, budget, SolveMode::First, Some(order))? {
        SolveOutcome::Sat(p) => Completion::Found(p),
        SolveOutcome::Exhausted { .. } => Completion::Exhausted,
        _ => Completion::Impossible,
    })
}

fn solve_cells(
    ts: &TileSet,
    comp: &Compiled,
    cells: Vec<TileAddress>,
    partial: &Patch,
    budget: u64,
    mode: SolveMode,
    mut order: Option<ValueOrder<'_>>,
) -> Result<SolveOutcome, TileError> {
    let digest = region_digest(&cells);
    let violations = check_patch(ts, partial)?;
    if !violations.is_empty() {
        return Err(TileError::InconsistentPartial(violations.len()));
    }
    let mut s = Search::new(cells, comp)?;
    let index: HashMap<TileAddress, u32> = s
        .cells
        .iter()
        .enumerate()
        .map(|(i, a)| (a.clone(), i as u32))
        .collect();
    let option_of: HashMap<(usize, u8), u32> = comp
        .options
        .iter()
        .enumerate()
        .map(|(i, &k)| (k, i as u32))
        .collect();
    for pl in partial.iter() {
        let cell = *index
            .get(&pl.address)
            .ok_or_else(|| TileError::PartialOutsideRegion(pl.address.clone()))?;
        let t = ts.position(&pl.type_id).expect("checked by check_patch");
        let ty = &ts.types[t];
        // map the rotation onto the canonical representative of its orientation
        let rot = (0..7u8)
            .find(|&r| {
                option_of.contains_key(&(t, r))
                    && (0..7).all(|e| {
                        ty.edge_at(r, e) == ty.edge_at(pl.rotation, e)
                            && ty.vertex_at(r, e) == ty.vertex_at(pl.rotation, e)
                    })
            })
            .expect("every orientation has a representative");
        s.assign(cell, option_of[&(t, rot)]);
    }
    s.trail.clear();

    let record = matches!(mode, SolveMode::First) && order.is_none();
    let mut steps: Vec<(u32, u32)> = Vec::new();
    let mut frames: Vec<Frame> = Vec::new();
    let mut nodes: u64 = 0;
    let mut found: u64 = 0;
    'search: loop {
        match s.queue.iter().next().copied() {
            None => match mode {
                SolveMode::First => {
                    let mut p = s.patch(ts);
                    for pl in partial.iter() {
                        p.insert(pl.clone());
                    }
                    return Ok(SolveOutcome::Sat(p));
                }
                SolveMode::Count(cap) => {
                    found += 1;
                    if found >= cap {
                        return Ok(SolveOutcome::Count {
                            count: found,
                            exhausted: false,
                        });
                    }
                }
            },
            Some((size, cell)) => {
                nodes += 1;
                if nodes > budget {
                    return Ok(SolveOutcome::Exhausted { budget });
                }
                if record {
                    steps.push((cell, size));
                }
                if size > 0 {
                    let mut options: Vec<u32> = s.domain[cell as usize].iter().collect();
                    if let Some(f) = order.as_mut() {
                        f(&s.cells[cell as usize], &mut options);
                    }
                    frames.push(Frame {
                        cell,
                        options,
                        next: 0,
                        mark: s.trail.len(),
                    });
                }
            }
        }
        loop {
            let Some(f) = frames.last_mut() else {
                return Ok(match mode {
                    SolveMode::First => SolveOutcome::Unsat {
                        nodes,
                        certificate: UnsatCertificate {
                            region_digest: digest,
                            tileset_digest: tileset_digest(ts),
                            partial: partial.clone(),
                            steps,
                        },
                    },
                    SolveMode::Count(_) => SolveOutcome::Count {
                        count: found,
                        exhausted: true,
                    },
                });
            };
            let (cell, mark) = (f.cell, f.mark);
            if f.next < f.options.len() {
                let o = f.options[f.next];
                f.next += 1;
                s.undo_to(mark);
                s.assign(cell, o);
                continue 'search;
            }
            frames.pop();
            s.undo_to(mark);
        }
    }
}

/// Replays a refutation independently of the solver's data structures.
///
/// Returns `Ok(false)` when the replay diverges or the step list is
/// incomplete, and [`TileError::MalformedCertificate`] when the certificate
/// was issued for a different region, tile set or partial patch.
pub fn verify_unsat_certificate(
    ts: &TileSet,
    region: &Region,
    cert: &UnsatCertificate,
) -> Result<bool, TileError> {
    let cells = region.tiles()?;
    if region_digest(&cells) != cert.region_digest {
        return Err(TileError::MalformedCertificate(
            "certificate was issued for a different region".into(),
        ));
    }
    if tileset_digest(ts) != cert.tileset_digest {
        return Err(TileError::MalformedCertificate(
            "certificate was issued for a different tile set".into(),
        ));
    }
    let index: HashMap<&TileAddress, usize> = cells.iter().enumerate().map(|(i, a)| (a, i)).collect();
    let mut placed: Vec<Option<(&TileType, u8)>> = vec![None; cells.len()];
    for pl in cert.partial.iter() {
        let &i = index
            .get(&pl.address)
            .ok_or_else(|| TileError::MalformedCertificate("partial outside region".into()))?;
        let t = ts
            .get(&pl.type_id)
            .ok_or_else(|| TileError::MalformedCertificate("partial uses unknown type".into()))?;
        placed[i] = Some((t, pl.rotation));
    }
    if !check_patch(ts, &cert.partial)?.is_empty() {
        return Err(TileError::MalformedCertificate("partial is inconsistent".into()));
    }
    let mut nbrs: Vec<[TileAddress; 7]> = Vec::with_capacity(cells.len());
    for c in &cells {
        nbrs.push(neighbors(c)?);
    }
    // Orientations, built directly from the tile list.
    let mut types: Vec<&TileType> = ts.types.iter().collect();
    types.sort_by(|a, b| a.id.cmp(&b.id));
    let mut orientations: Vec<(&TileType, u8)> = Vec::new();
    for t in types {
        for r in 0..7u8 {
            let dup = (0..r).any(|q| {
                (0..7).all(|e| t.edge_at(q, e) == t.edge_at(r, e) && t.vertex_at(q, e) == t.vertex_at(r, e))
            });
            if !dup {
                orientations.push((t, r));
            }
        }
    }
    let fits = |placed: &Vec<Option<(&TileType, u8)>>, c: usize, t: &TileType, r: u8| -> bool {
        for e in 0..7 {
            let b = &nbrs[c][e];
            let Some(&bi) = index.get(b) else { continue };
            let Some((tb, rb)) = placed[bi] else { continue };
            let j = nbrs[bi].iter().position(|x| *x == cells[c]).unwrap();
            if t.edge_at(r, e) != tb.edge_at(rb, j) {
                return false;
            }
            if t.vertex_at(r, e) != tb.vertex_at(rb, (j + 6) % 7)
                || t.vertex_at(r, (e + 6) % 7) != tb.vertex_at(rb, j)
            {
                return false;
            }
        }
        true
    };

    let mut pos = 0usize;
    let mut stack: Vec<(usize, Vec<usize>, usize)> = Vec::new();
    loop {
        let Some(&(cell, k)) = cert.steps.get(pos) else {
            return Ok(false);
        };
        pos += 1;
        let cell = cell as usize;
        if cell >= cells.len() {
            return Err(TileError::MalformedCertificate(format!("cell index {} out of range", cell)));
        }
        if placed[cell].is_some() {
            return Ok(false);
        }
        let fitting: Vec<usize> = (0..orientations.len())
            .filter(|&o| fits(&placed, cell, orientations[o].0, orientations[o].1))
            .collect();
        if fitting.len() != k as usize {
            return Ok(false);
        }
        if !fitting.is_empty() {
            stack.push((cell, fitting, 0));
        }
        loop {
            let Some(top) = stack.last_mut() else {
                return Ok(pos == cert.steps.len());
            };
            placed[top.0] = None;
            if top.2 < top.1.len() {
                let (t, r) = orientations[top.1[top.2]];
                top.2 += 1;
                placed[top.0] = Some((t, r));
                break;
            }
            stack.pop();
        }
    }
}
