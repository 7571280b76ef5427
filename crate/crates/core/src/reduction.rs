//! Refined mantillas: candidate trees, selected trees, the shrunk mantilla
//! and harps overlaid on selected trees.
//!
//! A harp tile never replaces the mantilla tile under it. It is combined
//! with it: the combined tile keeps the mantilla vertex marks, and each edge
//! carries the mantilla colour joined to the harp colour. Edges where the
//! harp is silent keep the plain mantilla colour, so a harp meets the
//! surrounding mantilla without dedicated seam tiles.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use thiserror::Error;

use crate::harp::{
    compile_tm, halting_cell, harp_roles, HarpError, HarpRegion, HarpTiles, Place, Slot, TileRole, TuringMachine,
};
use crate::heptagrid::{level_count, GridError, NodeKind, OrientedTree, Region, TileAddress};
use crate::mantilla::{grow, mantilla_tileset, shipped_grammar, Flower, FlowerTree, MantillaError, View};
use crate::tiles::{
    check_patch, solve_region, verify_unsat_certificate, EdgeColor, KindTag, NeighborCache, Patch, Placement,
    SolveMode, SolveOutcome, TileError, TileSet, TileType, UnsatCertificate, Violation,
};

#[derive(Debug, Error)]
pub enum ReductionError {
    #[error("not a mantilla: {0}")]
    NotAMantilla(String),
    #[error("candidate areas rooted at {0} and {1} overlap without nesting")]
    NestingViolation(TileAddress, TileAddress),
    #[error("no G-centre within distance 6 of shrunk tile {0}")]
    DensityViolation(TileAddress),
    #[error("shrunk interior splits into {0} components")]
    DisconnectedInterior(usize),
    #[error("selected tree at {0} cannot host a harp")]
    TreeTooSmall(TileAddress),
    #[error("bad combined tile id {0:?}")]
    BadTileId(String),
    #[error("harp overlay left {0} violations among harp tiles")]
    Inconsistent(usize),
    #[error(transparent)]
    Harp(#[from] HarpError),
    #[error(transparent)]
    Mantilla(#[from] MantillaError),
    #[error(transparent)]
    Tiles(#[from] TileError),
    #[error(transparent)]
    Grid(#[from] GridError),
}

/// Radius of the G-centre density property.
pub const DENSITY_RADIUS: usize = 6;

/// The tree hung from the F-son of a G-flower.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Candidate {
    pub g_flower: Flower,
    /// Centre of the F-son.
    pub root: TileAddress,
    /// Edge of the root facing its number-7 petal.
    pub up: usize,
    /// Tree tiles inside the patch whose whole ancestry is inside too.
    pub area: BTreeSet<TileAddress>,
    pub truncated: bool,
}

impl Candidate {
    pub fn tree(&self) -> OrientedTree {
        OrientedTree::new(self.root.clone(), self.up, NodeKind::W, false)
    }

    pub fn region(&self) -> Region {
        Region::Explicit(self.area.clone())
    }
}

fn mantilla_only(ts: &TileSet, p: &Patch) -> Result<(), ReductionError> {
    match p.iter().find(|pl| ts.get(&pl.type_id).is_none()) {
        Some(pl) => Err(ReductionError::NotAMantilla(format!("{} at {}", pl.type_id, pl.address))),
        None => Ok(()),
    }
}

/// Whether some tile of `area` has a neighbour missing from `p`.
fn touches_boundary(area: &BTreeSet<TileAddress>, p: &Patch, cache: &mut NeighborCache) -> Result<bool, GridError> {
    for a in area {
        if cache.get(a)?.iter().any(|n| !p.contains(n)) {
            return Ok(true);
        }
    }
    Ok(false)
}

/// One candidate per interior G-flower whose F-son centre is placed.
pub fn find_candidates(p: &Patch) -> Result<Vec<Candidate>, ReductionError> {
    let ts = mantilla_tileset();
    mantilla_only(&ts, p)?;
    if p.is_empty() {
        return Ok(Vec::new());
    }
    let tree = FlowerTree::build(&ts, p)?;
    let v = View::new(&ts, p);
    let mut cache = NeighborCache::default();
    let mut out = Vec::new();
    for f in crate::mantilla::flowers_of(&ts, p)? {
        if !f.kind.is_g() {
            continue;
        }
        let Some(y) = f_son(&v, &tree, &f)? else { continue };
        let seven = v.numbered(&y, 7)?;
        let up = v
            .neighbors(&y)?
            .iter()
            .position(|x| *x == seven)
            .ok_or_else(|| ReductionError::NotAMantilla(format!("centre {} has no number 7", y)))?;
        let t = OrientedTree::new(y.clone(), up, NodeKind::W, false);
        let (nodes, cut) = t.clipped(|a| p.contains(a))?;
        let area: BTreeSet<TileAddress> = nodes.into_iter().map(|n| n.address).collect();
        let truncated = cut || touches_boundary(&area, p, &mut cache)?;
        out.push(Candidate { g_flower: f, root: y, up, area, truncated });
    }
    out.sort_by(|a, b| a.root.cmp(&b.root));
    Ok(out)
}

/// The centre hanging from `g` at one of its junctions which is not a G.
fn f_son(v: &View, tree: &FlowerTree, g: &Flower) -> Result<Option<TileAddress>, ReductionError> {
    let Some(children) = tree.children.get(&g.centre) else { return Ok(None) };
    let mut junctions = Vec::new();
    for k in 1..=7 {
        junctions.push(v.junction(&g.centre, k)?.0);
    }
    Ok(children.iter().find(|c| junctions.contains(c) && !tree.kind[*c].is_g()).cloned())
}

/// Pairs compared by [`check_nesting`] and the first overlapping pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NestingReport {
    pub pairs: usize,
    pub offending: Option<(usize, usize)>,
}

impl NestingReport {
    pub fn ok(&self) -> bool {
        self.offending.is_none()
    }
}

/// Checks every pair of areas for disjointness or inclusion.
///
/// Areas are clipped by ancestry, so clipping keeps both relations: a clipped
/// area inside another one either stays inside or loses all its tiles to the
/// outer clipping. Truncated pairs are therefore compared too.
pub fn check_nesting(cs: &[Candidate]) -> NestingReport {
    let mut pairs = 0;
    for i in 0..cs.len() {
        for j in i + 1..cs.len() {
            pairs += 1;
            let (a, b) = (&cs[i].area, &cs[j].area);
            let common = a.intersection(b).count();
            if common != 0 && common != a.len() && common != b.len() {
                return NestingReport { pairs, offending: Some((i, j)) };
            }
        }
    }
    NestingReport { pairs, offending: None }
}

/// Candidates ordered by inclusion, smallest first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Thread {
    pub members: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SelectedTree {
    pub candidate: Candidate,
    pub harp: Option<HarpRegion>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Selection {
    /// Maximal candidates of the window, by root.
    pub selected: Vec<SelectedTree>,
    /// Maximal chains of the inclusion forest, indices into the input.
    pub threads: Vec<Thread>,
}

impl Selection {
    /// Selected trees whose maximality cannot be confirmed in the window.
    pub fn truncated(&self) -> impl Iterator<Item = &Candidate> {
        self.selected.iter().map(|s| &s.candidate).filter(|c| c.truncated)
    }
}

/// Groups candidates into threads and keeps the maximal one of each.
///
/// Every tree is infinite, so in a finite window nearly every candidate is
/// truncated; the maximal candidates of the window stand in for the selected
/// trees and stay flagged through [`Selection::truncated`].
pub fn select_trees(cs: &[Candidate]) -> Result<Selection, ReductionError> {
    if let Some((i, j)) = check_nesting(cs).offending {
        return Err(ReductionError::NestingViolation(cs[i].root.clone(), cs[j].root.clone()));
    }
    // parent: the smallest strictly larger area containing mine
    let mut order: Vec<usize> = (0..cs.len()).collect();
    order.sort_by_key(|&i| (cs[i].area.len(), cs[i].root.clone()));
    let mut parent = vec![None; cs.len()];
    for (k, &i) in order.iter().enumerate() {
        parent[i] = order[k + 1..]
            .iter()
            .copied()
            .find(|&j| cs[j].area.len() > cs[i].area.len() && cs[i].area.is_subset(&cs[j].area));
    }
    let mut has_child = vec![false; cs.len()];
    for p in parent.iter().flatten() {
        has_child[*p] = true;
    }
    let mut threads = Vec::new();
    for leaf in (0..cs.len()).filter(|&i| !has_child[i]) {
        let mut members = vec![leaf];
        while let Some(p) = parent[*members.last().unwrap()] {
            members.push(p);
        }
        threads.push(Thread { members });
    }
    threads.sort_by(|a, b| cs[a.members[0]].root.cmp(&cs[b.members[0]].root));
    let mut selected: Vec<SelectedTree> = (0..cs.len())
        .filter(|&i| parent[i].is_none())
        .map(|i| SelectedTree { candidate: cs[i].clone(), harp: None })
        .collect();
    selected.sort_by(|a, b| a.candidate.root.cmp(&b.candidate.root));
    Ok(Selection { selected, threads })
}

/// What [`shrink_mantilla_report`] checked.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShrinkReport {
    pub patch: Patch,
    /// Shrunk tiles whose radius-6 ball lies inside the window.
    pub interior: BTreeSet<TileAddress>,
}

/// Tiles of `p` at graph distance at least `d` from every tile outside `p`.
pub fn inner_tiles(p: &Patch, d: usize) -> Result<BTreeSet<TileAddress>, GridError> {
    let mut cache = NeighborCache::default();
    let mut dist: BTreeMap<TileAddress, usize> = BTreeMap::new();
    let mut queue = VecDeque::new();
    for a in p.addresses() {
        if cache.get(a)?.iter().any(|n| !p.contains(n)) {
            dist.insert(a.clone(), 1);
            queue.push_back(a.clone());
        }
    }
    while let Some(a) = queue.pop_front() {
        let da = dist[&a];
        for n in cache.get(&a)?.clone() {
            if p.contains(&n) && !dist.contains_key(&n) {
                dist.insert(n.clone(), da + 1);
                queue.push_back(n);
            }
        }
    }
    Ok(p.addresses().filter(|a| dist.get(*a).is_none_or(|&x| x >= d)).cloned().collect())
}

/// Removes the selected areas and checks the shrunk interior: connected, and
/// every tile within distance 6 of a remaining G-centre.
pub fn shrink_mantilla_report(p: &Patch, sel: &[SelectedTree]) -> Result<ShrinkReport, ReductionError> {
    let ts = mantilla_tileset();
    let mut q = p.clone();
    for s in sel {
        for a in &s.candidate.area {
            q.remove(a);
        }
    }
    let g_centres: BTreeSet<TileAddress> = q
        .iter()
        .filter(|pl| ts.get(&pl.type_id).is_some_and(|t| matches!(t.kind, KindTag::CentreGl | KindTag::CentreGr)))
        .map(|pl| pl.address.clone())
        .collect();
    let interior: BTreeSet<TileAddress> = inner_tiles(p, DENSITY_RADIUS + 1)?
        .into_iter()
        .filter(|a| q.contains(a))
        .collect();
    let mut cache = NeighborCache::default();
    for a in &interior {
        if !near(a, &g_centres, DENSITY_RADIUS, &mut cache)? {
            return Err(ReductionError::DensityViolation(a.clone()));
        }
    }
    let components = components(&interior, &mut cache)?;
    if components > 1 {
        return Err(ReductionError::DisconnectedInterior(components));
    }
    Ok(ShrinkReport { patch: q, interior })
}

pub fn shrink_mantilla(p: &Patch, sel: &[SelectedTree]) -> Result<Patch, ReductionError> {
    Ok(shrink_mantilla_report(p, sel)?.patch)
}

fn near(a: &TileAddress, targets: &BTreeSet<TileAddress>, r: usize, cache: &mut NeighborCache) -> Result<bool, GridError> {
    let mut seen = BTreeSet::from([a.clone()]);
    let mut frontier = vec![a.clone()];
    for _ in 0..=r {
        if frontier.iter().any(|x| targets.contains(x)) {
            return Ok(true);
        }
        let mut next = Vec::new();
        for x in &frontier {
            for n in cache.get(x)?.clone() {
                if seen.insert(n.clone()) {
                    next.push(n);
                }
            }
        }
        frontier = next;
    }
    Ok(false)
}

fn components(set: &BTreeSet<TileAddress>, cache: &mut NeighborCache) -> Result<usize, GridError> {
    let mut seen = BTreeSet::new();
    let mut count = 0;
    for s in set {
        if !seen.insert(s.clone()) {
            continue;
        }
        count += 1;
        let mut stack = vec![s.clone()];
        while let Some(x) = stack.pop() {
            for n in cache.get(&x)?.clone() {
                if set.contains(&n) && seen.insert(n.clone()) {
                    stack.push(n);
                }
            }
        }
    }
    Ok(count)
}

/// Tag carried by the marked petal facing the harp root from above.
pub const ROOT_MARK: &str = "root";
/// Tag carried by the marked petal on the right of the harp root.
pub const FRAME_MARK: &str = "frame";

/// A mantilla tile with optional marks and an optional harp overlay.
///
/// Id syntax: `<mantilla id>[!<tag><edge>]*[@<rel>+<harp id>]`, where edges
/// are indices of the mantilla tile and `rel` is the rotation of the harp
/// tile relative to the mantilla tile.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Combined {
    pub base: String,
    pub marks: Vec<(String, usize)>,
    pub harp: Option<(u8, String)>,
}

impl Combined {
    pub fn plain(base: &str) -> Combined {
        Combined { base: base.to_string(), marks: Vec::new(), harp: None }
    }

    pub fn id(&self) -> String {
        let mut s = self.base.clone();
        for (tag, e) in &self.marks {
            s += &format!("!{}{}", tag, e);
        }
        if let Some((rel, h)) = &self.harp {
            s += &format!("@{}+{}", rel, h);
        }
        s
    }

    pub fn parse(id: &str) -> Result<Combined, ReductionError> {
        let bad = || ReductionError::BadTileId(id.to_string());
        let (head, harp) = match id.split_once('@') {
            Some((head, rest)) => {
                let (rel, h) = rest.split_once('+').ok_or_else(bad)?;
                let rel: u8 = rel.parse().map_err(|_| bad())?;
                if rel >= 7 || h.is_empty() {
                    return Err(bad());
                }
                (head, Some((rel, h.to_string())))
            }
            None => (id, None),
        };
        let mut parts = head.split('!');
        let base = parts.next().filter(|b| !b.is_empty()).ok_or_else(bad)?.to_string();
        let mut marks = Vec::new();
        for m in parts {
            let split = m.find(|c: char| c.is_ascii_digit()).ok_or_else(bad)?;
            let e: usize = m[split..].parse().map_err(|_| bad())?;
            if e >= 7 || split == 0 {
                return Err(bad());
            }
            marks.push((m[..split].to_string(), e));
        }
        Ok(Combined { base, marks, harp })
    }

    pub fn is_plain(&self) -> bool {
        self.marks.is_empty() && self.harp.is_none()
    }

    /// The tile this id stands for.
    pub fn tile(&self, mantilla: &TileSet, harp: &HarpTiles) -> Result<TileType, ReductionError> {
        let bad = || ReductionError::BadTileId(self.id());
        let t = mantilla.get(&self.base).ok_or_else(bad)?;
        let mut edges = t.edges.clone();
        let mut kind = t.kind;
        if let Some((rel, h)) = &self.harp {
            let ht = harp.tileset.get(h).ok_or_else(bad)?;
            for (j, e) in edges.iter_mut().enumerate() {
                *e = join(e, ht.edge_at(*rel, j));
            }
            kind = ht.kind;
        }
        for (tag, j) in &self.marks {
            edges[*j] = join(&edges[*j], &EdgeColor::Channel(tag.clone()));
        }
        Ok(TileType { id: self.id(), kind, edges, vertices: t.vertices })
    }
}

/// Silent harp edges (`o`) keep the mantilla colour.
fn join(base: &EdgeColor, extra: &EdgeColor) -> EdgeColor {
    let extra = match extra {
        EdgeColor::Channel(s) if s == "o" => return base.clone(),
        EdgeColor::Channel(s) => s.clone(),
        c => c.to_string(),
    };
    let base = match base {
        EdgeColor::Channel(s) => s.clone(),
        c => c.to_string(),
    };
    EdgeColor::Channel(format!("{}|{}", base, extra))
}

/// Placement class of a harp node: which harp tiles may sit on it.
fn node_class(slot: Slot, place: Place) -> String {
    match place {
        Place::Cell { cell: 0, time: 0 } => "root".into(),
        Place::Cell { time: 0, .. } => "frame".into(),
        Place::Cell { cell, .. } => format!("{}.c{}", slot, u8::from(cell == 0)),
        Place::Filler { .. } => format!("{}.fill", slot),
    }
}

fn role_class(role: &TileRole) -> String {
    match role {
        TileRole::Root => "root".into(),
        TileRole::Frame { .. } => "frame".into(),
        TileRole::Cell { slot, col0, .. } => format!("{}.c{}", slot, u8::from(*col0)),
        TileRole::Filler { slot, .. } => format!("{}.fill", slot),
    }
}

/// Mantilla tile, harp rotation relative to it, and node class.
pub type Seat = (String, u8, String);

/// The harp region of a tree, as deep as the patch allows.
pub fn tree_harp(c: &Candidate, depth: Option<usize>) -> Result<HarpRegion, GridError> {
    let keep = |a: &TileAddress| c.area.contains(a);
    let full = HarpRegion::clipped(c.root.clone(), c.up, c.area.len() + 1, keep)?;
    let deepest = full.nodes().map(|n| n.depth).max().map_or(0, |d| d + 1);
    HarpRegion::clipped(c.root.clone(), c.up, depth.map_or(deepest, |d| d.min(deepest)), keep)
}

/// Seats offered by the nodes of `region` in `p`.
pub fn seats(p: &Patch, region: &HarpRegion) -> BTreeSet<Seat> {
    let mut out = BTreeSet::new();
    for n in region.nodes() {
        if let Some(pl) = p.get(&n.node.address) {
            let rel = (n.node.up as u8 + 7 - pl.rotation) % 7;
            out.insert((pl.type_id.clone(), rel, node_class(n.slot, n.place)));
        }
    }
    out
}

/// The marked petals of a tree: (petal, mark tag, mantilla edge facing the root).
pub fn marked_petals(p: &Patch, c: &Candidate) -> Result<Vec<(TileAddress, String, usize)>, ReductionError> {
    let ts = mantilla_tileset();
    let v = View::new(&ts, p);
    let mut cache = NeighborCache::default();
    let mut out = Vec::new();
    for (k, tag) in [(7, ROOT_MARK), (1, FRAME_MARK)] {
        let x = v.numbered(&c.root, k)?;
        let Some(pl) = p.get(&x) else {
            return Err(ReductionError::TreeTooSmall(c.root.clone()));
        };
        let e = cache.edge_towards(&x, &c.root)?;
        out.push((x, tag.to_string(), (e + 7 - pl.rotation as usize) % 7));
    }
    Ok(out)
}

/// Combined tiles for every seat, one per harp tile of the seat's class.
fn seat_tiles(seats: &BTreeSet<Seat>, mantilla: &TileSet, harp: &HarpTiles) -> Result<Vec<TileType>, ReductionError> {
    let mut by_class: BTreeMap<String, Vec<&str>> = BTreeMap::new();
    for (id, role) in &harp.roles {
        by_class.entry(role_class(role)).or_default().push(id);
    }
    let mut out = Vec::new();
    for (base, rel, class) in seats {
        for h in by_class.get(class).into_iter().flatten() {
            let c = Combined { base: base.clone(), marks: Vec::new(), harp: Some((*rel, h.to_string())) };
            out.push(c.tile(mantilla, harp)?);
        }
    }
    Ok(out)
}

/// The refined tile set of one machine.
#[derive(Debug, Clone)]
pub struct ReductionTileSet {
    pub base: TileSet,
    pub harp: HarpTiles,
    /// Mantilla tiles and their marked variants.
    pub skeleton_ids: Vec<String>,
    /// Combined tiles on the root, the frame and column 0.
    pub border_ids: Vec<String>,
    pub computation_ids: Vec<String>,
    /// Reference inventory sizes: total, skeleton, computing.
    pub reported_counts: (usize, usize, usize),
}

/// Seeds and radius of the patches whose trees give the seat inventory.
pub const INVENTORY_SEEDS: u64 = 3;
pub const INVENTORY_RADIUS: usize = 5;

impl ReductionTileSet {
    /// The base set plus the combined tiles of `p` it lacks.
    pub fn tileset_for(&self, p: &Patch) -> Result<TileSet, ReductionError> {
        let mantilla = mantilla_tileset();
        let mut extra = BTreeMap::new();
        for pl in p.iter() {
            if self.base.get(&pl.type_id).is_none() && !extra.contains_key(&pl.type_id) {
                let t = Combined::parse(&pl.type_id)?.tile(&mantilla, &self.harp)?;
                extra.insert(pl.type_id.clone(), t);
            }
        }
        if extra.is_empty() {
            return Ok(self.base.clone());
        }
        let more = TileSet::new("extra", extra.into_values().collect(), Vec::new())?;
        Ok(self.base.merged(&self.base.name, &more)?)
    }

    pub fn counts(&self) -> (usize, usize, usize, usize) {
        let (s, b, c) = (self.skeleton_ids.len(), self.border_ids.len(), self.computation_ids.len());
        (s + b + c, s, b, c)
    }
}

/// Skeleton, marked petals and combined tiles for `m`, over the seats found
/// in a few grown patches.
pub fn assemble_reduction(m: &TuringMachine) -> Result<ReductionTileSet, ReductionError> {
    let harp = compile_tm(m)?;
    let mantilla = mantilla_tileset();
    let mut all_seats = BTreeSet::new();
    let mut marked = BTreeSet::new();
    for seed in 0..INVENTORY_SEEDS {
        let p = grow(&mantilla, &shipped_grammar(), seed, INVENTORY_RADIUS)?;
        for c in find_candidates(&p)? {
            all_seats.extend(seats(&p, &tree_harp(&c, None)?));
            if let Ok(ms) = marked_petals(&p, &c) {
                for (x, tag, e) in ms {
                    let base = &p.get(&x).expect("marked petals are placed").type_id;
                    marked.insert(Combined { base: base.clone(), marks: vec![(tag, e)], harp: None });
                }
            }
        }
    }
    let mut types = mantilla.types.clone();
    let mut skeleton_ids: Vec<String> = types.iter().map(|t| t.id.clone()).collect();
    for c in &marked {
        types.push(c.tile(&mantilla, &harp)?);
        skeleton_ids.push(c.id());
    }
    let (mut border_ids, mut computation_ids) = (Vec::new(), Vec::new());
    for t in seat_tiles(&all_seats, &mantilla, &harp)? {
        match t.kind {
            KindTag::Border => border_ids.push(t.id.clone()),
            _ => computation_ids.push(t.id.clone()),
        }
        types.push(t);
    }
    let base = TileSet::new("refined", types, mantilla.skeleton.clone())?;
    Ok(ReductionTileSet { base, harp, skeleton_ids, border_ids, computation_ids, reported_counts: (64, 29, 19) })
}

/// Result of [`insert_harps_report`].
#[derive(Debug, Clone)]
pub struct Insertion {
    pub patch: Patch,
    pub harps: Vec<HarpRegion>,
    /// Roots of selected trees left as plain filling.
    pub too_small: Vec<TileAddress>,
    /// Host tiles removed at the window fringe.
    pub trimmed: Vec<TileAddress>,
}

/// Overlays the run of `m` on every selected tree.
///
/// Tree tiles whose ancestry leaves the window cannot carry the harp; where
/// they meet harp tiles they are removed and listed in `trimmed`.
pub fn insert_harps_report(p: &Patch, sel: &[SelectedTree], m: &TuringMachine) -> Result<Insertion, ReductionError> {
    let harp = compile_tm(m)?;
    let mantilla = mantilla_tileset();
    mantilla_only(&mantilla, p)?;
    let mut out = p.clone();
    let mut overlay: BTreeSet<TileAddress> = BTreeSet::new();
    let mut harps = Vec::new();
    let mut too_small = Vec::new();
    for s in sel {
        let c = &s.candidate;
        let marks = match marked_petals(p, c) {
            Ok(ms) => ms,
            Err(ReductionError::TreeTooSmall(a)) => {
                too_small.push(a);
                continue;
            }
            Err(e) => return Err(e),
        };
        let region = match &s.harp {
            Some(r) => r.clone(),
            None => tree_harp(c, None)?,
        };
        if region.is_empty() {
            too_small.push(c.root.clone());
            continue;
        }
        for (a, role) in harp_roles(m, &region)? {
            let pl = p.get(&a).expect("trees lie in the patch");
            let rel = (region.node(&a).expect("role of a node").node.up as u8 + 7 - pl.rotation) % 7;
            let id = Combined { base: pl.type_id.clone(), marks: Vec::new(), harp: Some((rel, role.id())) }.id();
            out.insert(Placement::new(a.clone(), id, pl.rotation));
            overlay.insert(a);
        }
        for (x, tag, e) in marks {
            let pl = out.get(&x).expect("marked petals are placed").clone();
            let mut cmb = Combined::parse(&pl.type_id)?;
            cmb.marks.push((tag, e));
            out.insert(Placement::new(x.clone(), cmb.id(), pl.rotation));
            overlay.insert(x);
        }
        harps.push(region);
    }
    let reduction = ReductionTileSet {
        base: mantilla.clone(),
        harp,
        skeleton_ids: Vec::new(),
        border_ids: Vec::new(),
        computation_ids: Vec::new(),
        reported_counts: (64, 29, 19),
    };
    let mut trimmed = Vec::new();
    loop {
        let ts = reduction.tileset_for(&out)?;
        let bad = check_patch(&ts, &out)?;
        if bad.is_empty() {
            break;
        }
        let mut drop = BTreeSet::new();
        let mut stuck = 0;
        for v in &bad {
            let tiles: Vec<&TileAddress> = match v {
                Violation::Edge { a, b, .. } => vec![a, b],
                Violation::Vertex { tiles } => tiles.iter().map(|t| &t.0).collect(),
            };
            let hosts: Vec<&TileAddress> = tiles.into_iter().filter(|a| !overlay.contains(*a)).collect();
            if hosts.is_empty() {
                stuck += 1;
            }
            drop.extend(hosts.into_iter().cloned());
        }
        if stuck > 0 {
            return Err(ReductionError::Inconsistent(stuck));
        }
        for a in drop {
            out.remove(&a);
            trimmed.push(a);
        }
    }
    trimmed.sort();
    Ok(Insertion { patch: out, harps, too_small, trimmed })
}

pub fn insert_harps(p: &Patch, sel: &[SelectedTree], m: &TuringMachine) -> Result<Patch, ReductionError> {
    Ok(insert_harps_report(p, sel, m)?.patch)
}

/// A search window around the top of one tree: the harp nodes are free, the
/// host tiles next to them are fixed, the marks included.
#[derive(Debug, Clone)]
pub struct Window {
    pub region: Region,
    pub partial: Patch,
    pub tileset: TileSet,
    pub harp: HarpRegion,
}

/// Builds the window of depth `depth` on candidate `c` of `p`. The tile set
/// holds the mantilla, the marked petals, and the combined tiles of every
/// seat occurring in the window.
pub fn window(p: &Patch, c: &Candidate, m: &TuringMachine, depth: usize) -> Result<Window, ReductionError> {
    let harp_tiles = compile_tm(m)?;
    let mantilla = mantilla_tileset();
    let harp = tree_harp(c, Some(depth))?;
    let mut cache = NeighborCache::default();
    let mut partial = Patch::new();
    for n in harp.nodes() {
        for x in cache.get(&n.node.address)?.clone() {
            if c.area.contains(&x) {
                continue;
            }
            if let Some(pl) = p.get(&x) {
                partial.insert(pl.clone());
            }
        }
    }
    let mut types = mantilla.types.clone();
    for (x, tag, e) in marked_petals(p, c)? {
        let pl = partial.get(&x).expect("marked petals touch the root").clone();
        let cmb = Combined { base: pl.type_id.clone(), marks: vec![(tag, e)], harp: None };
        types.push(cmb.tile(&mantilla, &harp_tiles)?);
        partial.insert(Placement::new(x, cmb.id(), pl.rotation));
    }
    types.extend(seat_tiles(&seats(p, &harp), &mantilla, &harp_tiles)?);
    let tileset = TileSet::new("window", types, Vec::new())?;
    let mut cells: BTreeSet<TileAddress> = harp.nodes().map(|n| n.node.address.clone()).collect();
    cells.extend(partial.addresses().cloned());
    Ok(Window { region: Region::Explicit(cells), partial, tileset, harp })
}

/// A certified refutation: the window cannot be tiled.
#[derive(Debug, Clone)]
pub struct UnsatWindow {
    pub root: TileAddress,
    pub depth: usize,
    pub cells: usize,
    pub nodes: u64,
    pub certificate: UnsatCertificate,
    pub verified: bool,
}

/// Solves the window of depth `depth` on the first candidate, in root order,
/// whose tree is complete to that depth.
pub fn solve_window(
    p: &Patch,
    cs: &[Candidate],
    m: &TuringMachine,
    depth: usize,
    budget: u64,
) -> Result<Option<(Candidate, Window, SolveOutcome)>, ReductionError> {
    for c in cs {
        let h = tree_harp(c, Some(depth))?;
        let full: u64 = (0..depth).map(level_count).sum();
        if h.len() as u64 != full || marked_petals(p, c).is_err() {
            continue;
        }
        let w = window(p, c, m, depth)?;
        let out = solve_region(&w.tileset, &w.region, &w.partial, budget, SolveMode::First)?;
        return Ok(Some((c.clone(), w, out)));
    }
    Ok(None)
}

/// Outcome of one reduction run at one radius.
#[derive(Debug, Clone)]
pub enum RadiusOutcome {
    /// Harps inserted, patch consistent.
    Consistent { harps: usize, deepest: usize, trimmed: usize },
    Unsat(UnsatWindow),
    /// No tree deep enough to decide.
    Open { deepest: usize },
}

#[derive(Debug, Clone)]
pub struct ReductionReport {
    pub machine: String,
    pub counts: (usize, usize, usize, usize),
    pub reported: (usize, usize, usize),
    pub seed: u64,
    pub rows: Vec<(usize, RadiusOutcome)>,
}

/// Grows a mantilla at each radius and runs the machine on its selected
/// trees. A machine halting within the deepest harp gets a solved window
/// instead.
pub fn run_reduction(
    name: &str,
    m: &TuringMachine,
    radii: &[usize],
    seed: u64,
    max_depth: usize,
    budget: u64,
) -> Result<ReductionReport, ReductionError> {
    let rts = assemble_reduction(m)?;
    let mantilla = mantilla_tileset();
    let mut rows = Vec::new();
    for &r in radii {
        let p = grow(&mantilla, &shipped_grammar(), seed, r)?;
        let cs = find_candidates(&p)?;
        let sel = select_trees(&cs)?;
        let mut deepest = 0;
        for s in &sel.selected {
            let d = tree_harp(&s.candidate, None)?.nodes().map(|n| n.depth + 1).max().unwrap_or(0);
            deepest = deepest.max(d);
        }
        let halt = halting_cell(m, max_depth)?.map(|(h, k)| h + k + 1).filter(|d| *d <= max_depth);
        let outcome = match halt {
            Some(d) => match solve_window(&p, &cs, m, d, budget)? {
                Some((c, w, SolveOutcome::Unsat { nodes, certificate })) => {
                    let verified = verify_unsat_certificate(&w.tileset, &w.region, &certificate)?;
                    let cells = w.region.tiles()?.len();
                    RadiusOutcome::Unsat(UnsatWindow { root: c.root, depth: d, cells, nodes, certificate, verified })
                }
                Some(_) | None => RadiusOutcome::Open { deepest },
            },
            None => {
                let ins = insert_harps_report(&p, &sel.selected, m)?;
                let ts = rts.tileset_for(&ins.patch)?;
                if !check_patch(&ts, &ins.patch)?.is_empty() {
                    return Err(ReductionError::Inconsistent(1));
                }
                RadiusOutcome::Consistent { harps: ins.harps.len(), deepest, trimmed: ins.trimmed.len() }
            }
        };
        rows.push((r, outcome));
    }
    Ok(ReductionReport { machine: name.to_string(), counts: rts.counts(), reported: rts.reported_counts, seed, rows })
}

impl fmt::Display for ReductionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (total, skeleton, border, computing) = self.counts;
        writeln!(f, "machine {}", self.machine)?;
        writeln!(f, "tiles total={} skeleton={} border={} computation={}", total, skeleton, border, computing)?;
        let (rt, rs, rc) = self.reported;
        writeln!(f, "reference total={} skeleton={} computing={}", rt, rs, rc)?;
        writeln!(f, "seed {}", self.seed)?;
        for (r, o) in &self.rows {
            match o {
                RadiusOutcome::Consistent { harps, deepest, trimmed } => writeln!(
                    f,
                    "radius {}: Sat consistent harps={} depth={} trimmed={}",
                    r, harps, deepest, trimmed
                )?,
                RadiusOutcome::Unsat(u) => writeln!(
                    f,
                    "radius {}: Unsat {} root={} depth={} cells={} nodes={} certificate={:016x}",
                    r,
                    if u.verified { "certified" } else { "UNVERIFIED" },
                    u.root,
                    u.depth,
                    u.cells,
                    u.nodes,
                    u.certificate.region_digest ^ u.certificate.tileset_digest
                )?,
                RadiusOutcome::Open { deepest } => writeln!(f, "radius {}: Open depth={}", r, deepest)?,
            }
        }
        Ok(())
    }
}
