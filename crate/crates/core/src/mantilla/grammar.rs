//! Sector grammar: which flower heads each sub-sector of a flower's sector,
//! and the top-down expansion that turns productions into placements.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use super::{centre_edge, mantilla_table, parse_color, FlowerKind, MantillaError};
use crate::heptagrid::{neighbors, Region, TileAddress};
use crate::tiles::{
    check_patch, solve_region, EdgeColor, Patch, Placement, SolveMode, SolveOutcome, TileSet,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SectorKind {
    F,
    Gl,
    Gr,
    /// Sector of an 8-flower; the flower sits on the border between two
    /// sibling sectors, each of which holds half of it.
    EightHalf,
}

impl SectorKind {
    pub const ALL: [SectorKind; 4] = [SectorKind::F, SectorKind::Gl, SectorKind::Gr, SectorKind::EightHalf];

    pub fn flower(self) -> FlowerKind {
        match self {
            SectorKind::F => FlowerKind::F,
            SectorKind::Gl => FlowerKind::Gl,
            SectorKind::Gr => FlowerKind::Gr,
            SectorKind::EightHalf => FlowerKind::Eight,
        }
    }

    pub fn of_flower(k: FlowerKind) -> Option<SectorKind> {
        match k {
            FlowerKind::F => Some(SectorKind::F),
            FlowerKind::Gl => Some(SectorKind::Gl),
            FlowerKind::Gr => Some(SectorKind::Gr),
            FlowerKind::Eight => Some(SectorKind::EightHalf),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SectorKind::F => "F",
            SectorKind::Gl => "Gl",
            SectorKind::Gr => "Gr",
            SectorKind::EightHalf => "EightHalf",
        }
    }
}

impl fmt::Display for SectorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SectorKind {
    type Err = MantillaError;
    fn from_str(s: &str) -> Result<SectorKind, MantillaError> {
        SectorKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| MantillaError::UnknownKind(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SectorGrammar {
    pub productions: BTreeMap<SectorKind, Vec<SectorKind>>,
}

impl SectorGrammar {
    pub fn parse(text: &str) -> Result<SectorGrammar, MantillaError> {
        let mut productions = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: String| MantillaError::Grammar { line: i + 1, msg };
            let (lhs, rhs) = line.split_once("->").ok_or_else(|| err("missing ->".into()))?;
            let lhs: SectorKind = lhs.trim().parse().map_err(|e: MantillaError| err(e.to_string()))?;
            let rhs = rhs
                .split_whitespace()
                .map(|s| s.parse())
                .collect::<Result<Vec<SectorKind>, _>>()
                .map_err(|e| err(e.to_string()))?;
            if rhs.len() < 2 {
                return Err(err(format!("{} needs at least two sub-sectors", lhs)));
            }
            if productions.insert(lhs, rhs).is_some() {
                return Err(err(format!("second production for {}", lhs)));
            }
        }
        Ok(SectorGrammar { productions })
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (k, v) in &self.productions {
            let rhs: Vec<&str> = v.iter().map(|x| x.name()).collect();
            s += &format!("{} -> {}\n", k, rhs.join(" "));
        }
        s
    }

    /// True when every kind has a production and productions only use
    /// kinds that have one.
    pub fn is_closed(&self) -> bool {
        SectorKind::ALL.iter().all(|k| self.productions.contains_key(k))
            && self.productions.values().flatten().all(|k| self.productions.contains_key(k))
    }

    /// Index of the F-son in the production of a G kind.
    pub fn f_son(&self, kind: SectorKind) -> Option<usize> {
        if !matches!(kind, SectorKind::Gl | SectorKind::Gr) {
            return None;
        }
        let p = self.productions.get(&kind)?;
        let fs: Vec<usize> = (0..p.len()).filter(|&i| p[i] == SectorKind::F).collect();
        (fs.len() == 1).then(|| fs[0])
    }

    /// Indices of G-sons in the production of `kind`.
    pub fn g_sons(&self, kind: SectorKind) -> Vec<usize> {
        self.productions
            .get(&kind)
            .map(|p| (0..p.len()).filter(|&i| matches!(p[i], SectorKind::Gl | SectorKind::Gr)).collect())
            .unwrap_or_default()
    }
}

/// Sub-sectors of `kind`.
pub fn split_sector(kind: SectorKind, grammar: &SectorGrammar) -> Result<Vec<SectorKind>, MantillaError> {
    grammar
        .productions
        .get(&kind)
        .cloned()
        .ok_or_else(|| MantillaError::UnknownKind(kind.to_string()))
}

pub fn shipped_grammar() -> SectorGrammar {
    SectorGrammar::parse(super::GRAMMAR).expect("bundled grammar parses")
}

/// Where a son hangs: across local edge `edge` of the petal with centre
/// number `petal`; the son's first number faces that petal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Slot {
    pub petal: usize,
    pub edge: usize,
    /// Whether the son also touches the next petal (a junction son).
    pub junction: bool,
}

/// A flower's own tiles relative to its centre, plus its son slots.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlowerTemplate {
    pub kind: FlowerKind,
    /// For numbers 2..=6: petal id and the petal's local edge facing the
    /// centre.
    pub petals: Vec<(usize, String, usize)>,
    /// Son slots in clockwise order: junctions first, then private ones.
    pub slots: Vec<Slot>,
    /// Kinds seen in the slots of the witness neighbourhood.
    pub witness: Vec<FlowerKind>,
}

/// Oriented placement of a flower centre.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Anchor {
    pub address: TileAddress,
    pub kind: FlowerKind,
    pub rotation: u8,
}

fn edge_to(from: &TileAddress, to: &TileAddress) -> Result<usize, MantillaError> {
    neighbors(from)?
        .iter()
        .position(|x| x == to)
        .ok_or_else(|| MantillaError::NotAMantilla(format!("{} is not next to {}", from, to)))
}

/// Placement of the petal with centre number `k` of the flower at `a`.
pub fn petal_placement(t: &FlowerTemplate, a: &Anchor, k: usize) -> Result<Placement, MantillaError> {
    let (_, id, facing) = t.petals.iter().find(|p| p.0 == k).expect("numbers 2..=6");
    let n = neighbors(&a.address)?;
    let addr = n[(centre_edge(k) + a.rotation as usize) % 7].clone();
    let back = edge_to(&addr, &a.address)?;
    Ok(Placement::new(addr, id.clone(), ((back + 7 - facing) % 7) as u8))
}

/// Anchor of a son of kind `kind` in slot `s` of the flower at `a`.
pub fn son_anchor(t: &FlowerTemplate, a: &Anchor, s: &Slot, kind: FlowerKind) -> Result<Anchor, MantillaError> {
    let p = petal_placement(t, a, s.petal)?;
    let n = neighbors(&p.address)?;
    let addr = n[(s.edge + p.rotation as usize) % 7].clone();
    let rotation = edge_to(&addr, &p.address)? as u8;
    Ok(Anchor { address: addr, kind, rotation })
}

/// Anchor of the parent of `child` when `child` fills slot `s` of a
/// parent of kind `parent`.
pub fn parent_anchor(
    t: &FlowerTemplate,
    child: &Anchor,
    s: &Slot,
) -> Result<Anchor, MantillaError> {
    let cn = neighbors(&child.address)?;
    let a1 = cn[(centre_edge(1) + child.rotation as usize) % 7].clone();
    let towards_child = edge_to(&a1, &child.address)?;
    let prot = (towards_child + 7 - s.edge) % 7;
    let (_, _, facing) = t.petals.iter().find(|p| p.0 == s.petal).expect("slot petal");
    let pn = neighbors(&a1)?;
    let addr = pn[(facing + prot) % 7].clone();
    let back = edge_to(&addr, &a1)?;
    let rotation = ((back + 7 - centre_edge(s.petal)) % 7) as u8;
    Ok(Anchor { address: addr, kind: t.kind, rotation })
}

/// The placements making up a flower's own tiles.
pub fn flower_placements(t: &FlowerTemplate, a: &Anchor) -> Result<Vec<Placement>, MantillaError> {
    let mut out = vec![Placement::new(a.address.clone(), a.kind.name(), a.rotation)];
    for k in 2..=6 {
        out.push(petal_placement(t, a, k)?);
    }
    Ok(out)
}

/// Templates of the four centre kinds, derived from the tile set.
#[derive(Debug, Clone)]
pub struct Templates {
    pub by_kind: BTreeMap<FlowerKind, FlowerTemplate>,
}

impl Templates {
    pub fn get(&self, k: FlowerKind) -> &FlowerTemplate {
        &self.by_kind[&k]
    }

    /// Derives the templates: petal orientations are the ones admitting a
    /// tiled neighbourhood; slots are read from a solved neighbourhood.
    pub fn derive(ts: &TileSet) -> Result<Templates, MantillaError> {
        let table = mantilla_table();
        let petals = table.effective_petals();
        let mut by_kind = BTreeMap::new();
        for kind in FlowerKind::CENTRES {
            let centre = ts.require(kind.name())?;
            // orientation options per number
            let mut options: Vec<Vec<(usize, String, usize)>> = Vec::new();
            for k in 2..=6 {
                let label = &centre.edges[centre_edge(k)];
                let (_, _, code) = petals
                    .iter()
                    .find(|(o, col, _)| *o == kind && parse_color(col).as_ref() == Some(label))
                    .ok_or_else(|| MantillaError::NotAMantilla(format!("no petal for {} {:?}", kind, label)))?;
                let id = super::code_id(code);
                let pt = ts.require(&id)?;
                let mut opts = Vec::new();
                for facing in 0..7 {
                    if &pt.edges[facing] == label {
                        opts.push((k, id.clone(), facing));
                    }
                }
                options.push(opts);
            }
            let mut feasible = Vec::new();
            let mut combo = vec![0usize; options.len()];
            loop {
                let chosen: Vec<(usize, String, usize)> =
                    combo.iter().zip(&options).map(|(&i, o)| o[i].clone()).collect();
                let t = FlowerTemplate { kind, petals: chosen, slots: vec![], witness: vec![] };
                let anchor = Anchor { address: TileAddress::Center, kind, rotation: 0 };
                let partial: Patch = flower_placements(&t, &anchor)?.into_iter().collect();
                if check_patch(ts, &partial)?.is_empty() {
                    let region = Region::Ball { center: TileAddress::Center, radius: 3 };
                    if let SolveOutcome::Sat(sol) = solve_region(ts, &region, &partial, 2_000_000, SolveMode::First)? {
                        feasible.push((t, sol));
                    }
                }
                // odometer
                let mut i = 0;
                while i < combo.len() {
                    combo[i] += 1;
                    if combo[i] < options[i].len() {
                        break;
                    }
                    combo[i] = 0;
                    i += 1;
                }
                if i == combo.len() {
                    break;
                }
            }
            if feasible.len() != 1 {
                return Err(MantillaError::NotAMantilla(format!(
                    "{} flower has {} admissible petal orientations",
                    kind,
                    feasible.len()
                )));
            }
            let (mut t, sol) = feasible.pop().expect("one");
            // sons: centres whose first number faces a non-parental petal
            let anchor = Anchor { address: TileAddress::Center, kind, rotation: 0 };
            let mut junction = Vec::new();
            let mut private = Vec::new();
            for k in 2..=6 {
                let p = petal_placement(&t, &anchor, k)?;
                let next = if k < 6 { Some(petal_placement(&t, &anchor, k + 1)?.address) } else { None };
                let pn = neighbors(&p.address)?;
                for (ge, c) in pn.iter().enumerate() {
                    let Some(cp) = sol.get(c) else { continue };
                    let Some(ck) = ts.get(&cp.type_id).and_then(|x| FlowerKind::from_tag(x.kind)) else { continue };
                    if *c == TileAddress::Center {
                        continue;
                    }
                    let facing = edge_to(c, &p.address)?;
                    if (facing + 7 - cp.rotation as usize) % 7 != centre_edge(1) {
                        continue;
                    }
                    let edge = (ge + 7 - p.rotation as usize) % 7;
                    let is_j = match &next {
                        Some(nx) => neighbors(c)?.contains(nx),
                        None => false,
                    };
                    let s = Slot { petal: k, edge, junction: is_j };
                    if is_j { junction.push((s, ck)) } else { private.push((s, ck)) }
                }
            }
            // a private son on a shared petal is a junction son of the other
            // owner, which is always an 8
            let shared = table.owners();
            private.retain(|(s, _)| {
                let id = &t.petals.iter().find(|p| p.0 == s.petal).expect("slot petal").1;
                shared.get(id).map_or(true, |o| o.len() < 2)
            });
            for (s, k) in junction.into_iter().chain(private) {
                t.slots.push(s);
                t.witness.push(k);
            }
            by_kind.insert(kind, t);
        }
        Ok(Templates { by_kind })
    }
}

/// Placement conflicts found while expanding.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Conflict {
    pub address: TileAddress,
    pub placed: Placement,
    pub wanted: Placement,
}

fn same_tile(ts: &TileSet, a: &Placement, b: &Placement) -> bool {
    if a.type_id != b.type_id {
        return false;
    }
    let Some(t) = ts.get(&a.type_id) else { return false };
    (0..7).all(|e| {
        t.edge_at(a.rotation, e) == t.edge_at(b.rotation, e)
            && t.vertex_at(a.rotation, e) == t.vertex_at(b.rotation, e)
    })
}

/// Top-down expansion of sectors into a patch.
pub struct Expander<'a> {
    pub ts: &'a TileSet,
    pub grammar: &'a SectorGrammar,
    pub templates: &'a Templates,
}

impl<'a> Expander<'a> {
    /// Places `a`'s flower and recursively its sons while `descend(parent,
    /// son, depth)` accepts them. Returns the anchors expanded, in order.
    pub fn expand(
        &self,
        patch: &mut Patch,
        a: &Anchor,
        descend: &mut dyn FnMut(&Anchor, &Anchor, usize) -> bool,
        skip: &BTreeSet<TileAddress>,
    ) -> Result<Vec<Anchor>, MantillaError> {
        let mut done = Vec::new();
        let mut stack = vec![(a.clone(), 0usize)];
        while let Some((x, depth)) = stack.pop() {
            let t = self.templates.get(x.kind);
            for pl in flower_placements(t, &x)? {
                self.put(patch, pl)?;
            }
            let kind = SectorKind::of_flower(x.kind).expect("centre kind");
            let prod = split_sector(kind, self.grammar)?;
            if prod.len() != t.slots.len() {
                return Err(MantillaError::Grammar {
                    line: 0,
                    msg: format!("{} has {} slots, production has {}", kind, t.slots.len(), prod.len()),
                });
            }
            for (s, sk) in t.slots.iter().zip(&prod).rev() {
                let son = son_anchor(t, &x, s, sk.flower())?;
                if skip.contains(&son.address) {
                    continue;
                }
                if descend(&x, &son, depth + 1) {
                    stack.push((son, depth + 1));
                }
            }
            done.push(x);
        }
        Ok(done)
    }

    pub fn put(&self, patch: &mut Patch, pl: Placement) -> Result<(), MantillaError> {
        match patch.get(&pl.address) {
            Some(old) if same_tile(self.ts, old, &pl) => Ok(()),
            Some(old) => Err(MantillaError::NotAMantilla(format!(
                "expansion conflict at {}: {} r{} vs {} r{}",
                pl.address, old.type_id, old.rotation, pl.type_id, pl.rotation
            ))),
            None => {
                patch.insert(pl);
                Ok(())
            }
        }
    }
}

/// One tried grammar and its verdict.
#[derive(Debug, Clone)]
pub struct GrammarCandidate {
    pub grammar: SectorGrammar,
    pub accepted: bool,
    pub note: String,
}

/// Kinds admitted by each slot when a single son is hung there and the
/// neighbourhood is completed by the solver.
pub fn slot_admissible(
    ts: &TileSet,
    templates: &Templates,
    budget: u64,
) -> Result<BTreeMap<SectorKind, Vec<Vec<SectorKind>>>, MantillaError> {
    let mut out = BTreeMap::new();
    for kind in SectorKind::ALL {
        let t = templates.get(kind.flower());
        let a = Anchor { address: TileAddress::Center, kind: kind.flower(), rotation: 0 };
        let base: Patch = flower_placements(t, &a)?.into_iter().collect();
        let mut per_slot = Vec::new();
        for s in &t.slots {
            let mut ok = Vec::new();
            for sk in SectorKind::ALL {
                let son = son_anchor(t, &a, s, sk.flower())?;
                let mut p = base.clone();
                let st = templates.get(sk.flower());
                let mut fine = true;
                for pl in flower_placements(st, &son)? {
                    match p.get(&pl.address) {
                        Some(old) if same_tile(ts, old, &pl) => {}
                        Some(_) => fine = false,
                        None => {
                            p.insert(pl);
                        }
                    }
                }
                if !fine || !check_patch(ts, &p)?.is_empty() {
                    continue;
                }
                let region = Region::Ball { center: TileAddress::Center, radius: 4 };
                if let SolveOutcome::Sat(_) = solve_region(ts, &region, &p, budget, SolveMode::First)? {
                    ok.push(sk);
                }
            }
            per_slot.push(ok);
        }
        out.insert(kind, per_slot);
    }
    Ok(out)
}

/// Expands `root` `levels` deep and checks the result.
pub fn check_expansion(
    ts: &TileSet,
    templates: &Templates,
    grammar: &SectorGrammar,
    root: SectorKind,
    levels: usize,
) -> Result<(), MantillaError> {
    let ex = Expander { ts, grammar, templates };
    let mut p = Patch::new();
    let a = Anchor { address: TileAddress::Center, kind: root.flower(), rotation: 0 };
    ex.expand(&mut p, &a, &mut |_, _, d| d <= levels, &BTreeSet::new())?;
    let v = check_patch(ts, &p)?;
    if !v.is_empty() {
        return Err(MantillaError::NotAMantilla(format!("{} violations, first {}", v.len(), v[0])));
    }
    super::flowers_of(ts, &p)?;
    Ok(())
}

/// Enumerates grammars over the admissible slot kinds and keeps those whose
/// expansions from every kind stay consistent `levels` deep.
pub fn search_grammars(
    ts: &TileSet,
    levels: usize,
    budget: u64,
) -> Result<(Templates, Vec<GrammarCandidate>), MantillaError> {
    let templates = Templates::derive(ts)?;
    let adm = slot_admissible(ts, &templates, budget)?;
    let mut axes: Vec<(SectorKind, usize, Vec<SectorKind>)> = Vec::new();
    for (k, slots) in &adm {
        for (i, s) in slots.iter().enumerate() {
            axes.push((*k, i, s.clone()));
        }
    }
    let mut out = Vec::new();
    if axes.iter().any(|a| a.2.is_empty()) {
        return Ok((templates, out));
    }
    let mut idx = vec![0usize; axes.len()];
    loop {
        let mut productions: BTreeMap<SectorKind, Vec<SectorKind>> = BTreeMap::new();
        for (a, &i) in axes.iter().zip(&idx) {
            productions.entry(a.0).or_default().push(a.2[i]);
        }
        let grammar = SectorGrammar { productions };
        let mut note = String::new();
        let mut accepted = grammar.is_closed();
        if accepted {
            for root in SectorKind::ALL {
                if let Err(e) = check_expansion(ts, &templates, &grammar, root, levels) {
                    accepted = false;
                    note = format!("{}: {}", root, e);
                    break;
                }
            }
        } else {
            note = "not closed".into();
        }
        out.push(GrammarCandidate { grammar, accepted, note });
        let mut j = 0;
        while j < idx.len() {
            idx[j] += 1;
            if idx[j] < axes[j].2.len() {
                break;
            }
            idx[j] = 0;
            j += 1;
        }
        if j == idx.len() {
            break;
        }
    }
    Ok((templates, out))
}

pub fn color_name(c: &EdgeColor) -> String {
    c.to_string()
}
