//! Randomized growth of a mantilla patch.
//!
//! A first tile is drawn from the skeleton and set at the centre of the
//! grid. Its flower heads the patch. Each stage then climbs: the parental
//! petals of the current head are drawn among what the grammar allows,
//! which fixes the parent flower, and the parent's sector is expanded top
//! down until the patch covers the next ball.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::grammar::{
    flower_placements, parent_anchor, son_anchor, Anchor, Expander, SectorGrammar, SectorKind, Templates,
};
use super::{centre_edge, FlowerKind, MantillaError};
use crate::heptagrid::{ball, neighbors, TileAddress};
use crate::tiles::{check_patch, KindTag, Patch, Placement, TileSet};

/// Petal ids admissible at numbers 1 and 7 of each centre kind.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ParentalChoices {
    pub allowed: BTreeMap<(FlowerKind, usize), Vec<String>>,
}

impl ParentalChoices {
    /// Every petal type and rotation that can sit at number 1 or 7 next to
    /// the flower's own tiles without a local clash.
    pub fn enumerate(ts: &TileSet, templates: &Templates) -> Result<ParentalChoices, MantillaError> {
        let mut allowed = BTreeMap::new();
        for kind in FlowerKind::CENTRES {
            let t = templates.get(kind);
            let a = Anchor { address: TileAddress::Center, kind, rotation: 0 };
            let base: Patch = flower_placements(t, &a)?.into_iter().collect();
            let n = neighbors(&TileAddress::Center)?;
            for k in [1, 7] {
                let addr = &n[centre_edge(k)];
                let mut ids = Vec::new();
                for ty in ts.types.iter().filter(|ty| ty.kind == KindTag::Petal) {
                    let ok = (0..7u8).any(|r| {
                        let mut p = base.clone();
                        p.insert(Placement::new(addr.clone(), ty.id.clone(), r));
                        check_patch(ts, &p).map(|v| v.is_empty()).unwrap_or(false)
                    });
                    if ok {
                        ids.push(ty.id.clone());
                    }
                }
                ids.sort();
                allowed.insert((kind, k), ids);
            }
        }
        Ok(ParentalChoices { allowed })
    }

    pub fn parse(text: &str) -> Result<ParentalChoices, MantillaError> {
        let mut allowed = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: &str| MantillaError::Table { line: i + 1, msg: msg.to_string() };
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.len() < 2 {
                return Err(err("expected: kind number ids..."));
            }
            let kind = FlowerKind::CENTRES
                .into_iter()
                .find(|k| k.name() == f[0])
                .ok_or_else(|| err("bad kind"))?;
            let k: usize = f[1].parse().map_err(|_| err("bad number"))?;
            if k != 1 && k != 7 {
                return Err(err("number must be 1 or 7"));
            }
            allowed.insert((kind, k), f[2..].iter().map(|s| s.to_string()).collect());
        }
        Ok(ParentalChoices { allowed })
    }

    pub fn to_text(&self) -> String {
        let mut s = String::from("# Petal ids admissible at the parental numbers of each centre kind.\n");
        for ((kind, k), ids) in &self.allowed {
            s += &format!("{} {} {}\n", kind, k, ids.join(" "));
        }
        s
    }

    pub fn allows(&self, kind: FlowerKind, k: usize, id: &str) -> bool {
        self.allowed.get(&(kind, k)).is_some_and(|v| v.iter().any(|x| x == id))
    }
}

pub fn shipped_parental() -> ParentalChoices {
    ParentalChoices::parse(super::PARENTAL).expect("bundled parental choices parse")
}

/// One random draw: what was drawn, the options offered, and the pick.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Draw {
    pub index: usize,
    pub what: String,
    pub options: Vec<String>,
    pub pick: usize,
}

impl fmt::Display for Draw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "draw {} {} options={} pick={} ({})",
            self.index,
            self.what,
            self.options.len(),
            self.pick,
            self.options.get(self.pick).map(String::as_str).unwrap_or("?")
        )
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct GrowthLog {
    pub draws: Vec<Draw>,
    /// Patch size after each stage.
    pub stages: Vec<usize>,
    /// Heads, one per climb, starting with the first flower.
    pub heads: Vec<(TileAddress, FlowerKind)>,
}

impl GrowthLog {
    pub fn lines(&self) -> Vec<String> {
        let mut out: Vec<String> = self.draws.iter().map(|d| d.to_string()).collect();
        for (i, s) in self.stages.iter().enumerate() {
            out.push(format!("stage {} tiles={}", i + 1, s));
        }
        out
    }
}

/// The patch after one stage of growth.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrowthState {
    pub origin: TileAddress,
    pub step: usize,
    pub area: Patch,
    pub seed: u64,
    /// Draws consumed so far.
    pub cursor: usize,
}

/// Climbs per stage before giving up.
const MAX_CLIMBS: usize = 16;
/// Climbs after which refused sons get extra slack.
const DEEPEN_AFTER: usize = 4;
/// Rings expanded beyond the target ball.
const MARGIN: usize = 1;
/// Outward steps allowed to a chain outside the expanded rings.
const SLACK: usize = 3;

struct Grower<'a> {
    ts: &'a TileSet,
    templates: Templates,
    grammar: &'a SectorGrammar,
    parental: ParentalChoices,
    rng: ChaCha8Rng,
    log: GrowthLog,
    patch: Patch,
    expanded: BTreeSet<TileAddress>,
    frontier: Vec<(Anchor, usize)>,
    slack: std::collections::HashMap<TileAddress, usize>,
}

impl<'a> Grower<'a> {
    fn draw(&mut self, what: String, options: Vec<String>) -> usize {
        let pick = self.rng.gen_range(0..options.len());
        let index = self.log.draws.len();
        self.log.draws.push(Draw { index, what, options, pick });
        pick
    }

    /// Expands `roots` and pending sons. A son is expanded when it lies
    /// within `bound` rings, or while its chain heads back toward the
    /// centre; a chain may drift outward for `SLACK` steps.
    fn expand(&mut self, roots: Vec<Anchor>, bound: usize) -> Result<(), MantillaError> {
        let ex = Expander { ts: self.ts, grammar: self.grammar, templates: &self.templates };
        let mut todo: Vec<(Anchor, usize)> = roots.into_iter().map(|a| (a, SLACK)).collect();
        todo.append(&mut std::mem::take(&mut self.frontier));
        let mut refused = Vec::new();
        let slack = &mut self.slack;
        for (a, s) in todo {
            if self.expanded.contains(&a.address) {
                continue;
            }
            if a.address.ring() > bound && s == 0 {
                refused.push((a, s));
                continue;
            }
            slack.insert(a.address.clone(), s);
            let done = ex.expand(
                &mut self.patch,
                &a,
                &mut |x, son, _| {
                    let px = slack.get(&x.address).copied().unwrap_or(0);
                    let r = son.address.ring();
                    let sx = if r <= bound {
                        SLACK
                    } else if r < x.address.ring() {
                        px
                    } else {
                        px.saturating_sub(1)
                    };
                    if r <= bound || sx > 0 {
                        slack.insert(son.address.clone(), sx);
                        true
                    } else {
                        refused.push((son.clone(), sx));
                        false
                    }
                },
                &self.expanded,
            )?;
            self.expanded.extend(done.into_iter().map(|x| x.address));
        }
        refused.retain(|a| !self.expanded.contains(&a.0.address));
        self.frontier = refused;
        Ok(())
    }

    fn first_flower(&mut self) -> Result<Anchor, MantillaError> {
        let mut skeleton = self.ts.skeleton.clone();
        skeleton.sort();
        let i = self.draw("first tile".into(), skeleton.clone());
        let id = skeleton[i].clone();
        let rots: Vec<String> = (0..7).map(|r| r.to_string()).collect();
        let rot = self.draw("first rotation".into(), rots) as u8;
        let ty = self.ts.require(&id)?;
        if let Some(kind) = FlowerKind::from_tag(ty.kind) {
            return Ok(Anchor { address: TileAddress::Center, kind, rotation: rot });
        }
        // a petal: draw the flower holding it
        let n = neighbors(&TileAddress::Center)?;
        let mut options = Vec::new();
        for kind in FlowerKind::CENTRES {
            for (k, pid, facing) in &self.templates.get(kind).petals {
                if *pid != id {
                    continue;
                }
                let addr = n[(facing + rot as usize) % 7].clone();
                let back = neighbors(&addr)?.iter().position(|x| *x == TileAddress::Center).expect("adjacent");
                let rotation = ((back + 7 - centre_edge(*k)) % 7) as u8;
                options.push(Anchor { address: addr, kind, rotation });
            }
        }
        if options.is_empty() {
            return Err(MantillaError::StuckGrowth { step: 0, msg: format!("{} is in no flower", id) });
        }
        let names = options.iter().map(|a| format!("{}@{}", a.kind, a.address)).collect();
        let i = self.draw(format!("flower of {}", id), names);
        Ok(options.swap_remove(i))
    }

    /// Parent flowers the grammar allows above `head`, whose own tiles fit
    /// the patch and whose parental petals are admissible.
    fn parent_options(&self, head: &Anchor) -> Result<Vec<(Anchor, usize)>, MantillaError> {
        let sk = SectorKind::of_flower(head.kind).expect("centre");
        let ex = Expander { ts: self.ts, grammar: self.grammar, templates: &self.templates };
        let mut out = Vec::new();
        for pk in FlowerKind::CENTRES {
            let t = self.templates.get(pk);
            let prod = &self.grammar.productions[&SectorKind::of_flower(pk).expect("centre")];
            for (i, (s, son)) in t.slots.iter().zip(prod).enumerate() {
                if *son != sk {
                    continue;
                }
                let pa = parent_anchor(t, head, s)?;
                if son_anchor(t, &pa, s, head.kind)? != *head {
                    continue;
                }
                let mut p = Patch::new();
                let mut fine = true;
                let mut touched = Vec::new();
                for pl in flower_placements(t, &pa)? {
                    touched.push(pl.address.clone());
                    if ex.put(&mut p, pl).is_err() {
                        fine = false;
                    }
                }
                for pl in p.iter() {
                    if let Some(old) = self.patch.get(&pl.address) {
                        if old.type_id != pl.type_id {
                            fine = false;
                        }
                    }
                }
                if !fine || !self.fits(&p)? {
                    continue;
                }
                // the head's first petal is the parent's
                let first = &p.iter().find(|pl| {
                    neighbors(&head.address).map(|n| n[(centre_edge(1) + head.rotation as usize) % 7] == pl.address).unwrap_or(false)
                });
                if let Some(q) = first {
                    if !self.parental.allows(head.kind, 1, &q.type_id) {
                        continue;
                    }
                }
                out.push((pa, i));
            }
        }
        Ok(out)
    }

    /// True when `extra` clashes with nothing placed.
    fn fits(&self, extra: &Patch) -> Result<bool, MantillaError> {
        let mut local = Patch::new();
        for pl in extra.iter() {
            local.insert(self.patch.get(&pl.address).cloned().unwrap_or_else(|| pl.clone()));
            for b in neighbors(&pl.address)? {
                if let Some(q) = self.patch.get(&b) {
                    local.insert(q.clone());
                }
            }
        }
        for pl in extra.iter() {
            if !local.contains(&pl.address) {
                local.insert(pl.clone());
            }
        }
        Ok(check_patch(self.ts, &local)?.is_empty())
    }
}

/// Grows a patch containing the ball of radius `radius` around its first
/// tile, which sits at the grid centre.
pub fn grow(ts: &TileSet, grammar: &SectorGrammar, seed: u64, radius: usize) -> Result<Patch, MantillaError> {
    grow_logged(ts, grammar, seed, radius).map(|x| x.0)
}

pub fn grow_logged(
    ts: &TileSet,
    grammar: &SectorGrammar,
    seed: u64,
    radius: usize,
) -> Result<(Patch, GrowthLog), MantillaError> {
    run(ts, grammar, seed, radius, None)
}

/// Grows and also returns the state after every stage, starting with the
/// first flower as stage 0.
pub fn grow_states(
    ts: &TileSet,
    grammar: &SectorGrammar,
    seed: u64,
    radius: usize,
) -> Result<Vec<GrowthState>, MantillaError> {
    let mut states = Vec::new();
    run(ts, grammar, seed, radius, Some(&mut states))?;
    Ok(states)
}

fn run(
    ts: &TileSet,
    grammar: &SectorGrammar,
    seed: u64,
    radius: usize,
    mut states: Option<&mut Vec<GrowthState>>,
) -> Result<(Patch, GrowthLog), MantillaError> {
    let templates = Templates::derive(ts)?;
    let parental = if ts.name == "mantilla" { shipped_parental() } else { ParentalChoices::enumerate(ts, &templates)? };
    let mut g = Grower {
        ts,
        templates,
        grammar,
        parental,
        rng: ChaCha8Rng::seed_from_u64(seed),
        log: GrowthLog::default(),
        patch: Patch::new(),
        expanded: BTreeSet::new(),
        frontier: Vec::new(),
        slack: Default::default(),
    };
    let mut head = g.first_flower()?;
    g.log.heads.push((head.address.clone(), head.kind));
    g.expand(vec![head.clone()], MARGIN)?;
    let mut snapshot = |g: &Grower, step: usize| {
        if let Some(v) = states.as_deref_mut() {
            v.push(GrowthState {
                origin: TileAddress::Center,
                step,
                area: g.patch.clone(),
                seed,
                cursor: g.log.draws.len(),
            });
        }
    };
    snapshot(&g, 0);
    for n in 0..radius {
        let bound = n + 1 + MARGIN;
        g.expand(vec![], bound)?;
        let want = ball(&TileAddress::Center, n + 1)?;
        let mut climbs = 0;
        // every stage draws parental tiles at least once
        while climbs == 0 || want.iter().any(|a| !g.patch.contains(a)) {
            climbs += 1;
            if climbs > MAX_CLIMBS {
                let miss = want.iter().find(|a| !g.patch.contains(a)).expect("some");
                return Err(MantillaError::StuckGrowth {
                    step: n + 1,
                    msg: format!("{} still uncovered after {} climbs", miss, MAX_CLIMBS),
                });
            }
            if climbs > DEEPEN_AFTER && !g.frontier.is_empty() {
                // the missing tiles may hang off a chain that drifted outward
                for f in &mut g.frontier {
                    f.1 += 1;
                }
                g.expand(vec![], bound)?;
                if want.iter().all(|a| g.patch.contains(a)) {
                    break;
                }
            }
            let mut opts = g.parent_options(&head)?;
            if opts.is_empty() {
                return Err(MantillaError::StuckGrowth {
                    step: n + 1,
                    msg: format!("no parent fits above {} at {}", head.kind, head.address),
                });
            }
            let names = opts.iter().map(|(a, i)| format!("{}[{}]@{}", a.kind, i, a.address)).collect();
            let i = g.draw(format!("parent of {} at {}", head.kind, head.address), names);
            let (parent, _) = opts.swap_remove(i);
            head = parent;
            g.log.heads.push((head.address.clone(), head.kind));
            g.expand(vec![head.clone()], bound)?;
        }
        g.log.stages.push(g.patch.len());
        snapshot(&g, n + 1);
    }
    Ok((g.patch, g.log))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mantilla::grammar::shipped_grammar;
    use crate::mantilla::{flowers_of, mantilla_tileset};
    use proptest::prelude::*;

    #[test]
    fn shipped_parental_choices_match_enumeration() {
        let ts = mantilla_tileset();
        let t = Templates::derive(&ts).unwrap();
        let e = ParentalChoices::enumerate(&ts, &t).unwrap();
        assert_eq!(e, shipped_parental());
        assert_eq!(ParentalChoices::parse(&e.to_text()).unwrap(), e);
    }

    #[test]
    fn radius_zero_and_two() {
        let ts = mantilla_tileset();
        let g = shipped_grammar();
        let p = grow(&ts, &g, 1, 0).unwrap();
        assert!(p.contains(&TileAddress::Center));
        assert!(check_patch(&ts, &p).unwrap().is_empty());
        for seed in 0..4 {
            let p = grow(&ts, &g, seed, 2).unwrap();
            assert!(p.len() >= 29);
            assert!(ball(&TileAddress::Center, 2).unwrap().iter().all(|a| p.contains(a)));
            assert!(check_patch(&ts, &p).unwrap().is_empty());
        }
    }

    #[test]
    fn seeds_replay_and_differ() {
        let ts = mantilla_tileset();
        let g = shipped_grammar();
        let (a, la) = grow_logged(&ts, &g, 42, 3).unwrap();
        let (b, lb) = grow_logged(&ts, &g, 42, 3).unwrap();
        assert_eq!(a, b);
        assert_eq!(la, lb);
        let others: Vec<Patch> = (0..4).map(|s| grow(&ts, &g, s, 3).unwrap()).collect();
        assert!(others.iter().any(|p| *p != a));
    }

    #[test]
    fn stages_grow_monotonically() {
        let ts = mantilla_tileset();
        let g = shipped_grammar();
        let states = grow_states(&ts, &g, 9, 4).unwrap();
        assert_eq!(states.len(), 5);
        for w in states.windows(2) {
            assert!(w[1].area.len() > w[0].area.len());
            assert!(w[1].cursor >= w[0].cursor);
            for pl in w[0].area.iter() {
                assert_eq!(w[1].area.get(&pl.address), Some(pl));
            }
        }
        for s in &states {
            assert!(ball(&s.origin, s.step).unwrap().iter().all(|a| s.area.contains(a)));
        }
    }

    #[test]
    fn log_records_every_draw() {
        let ts = mantilla_tileset();
        let g = shipped_grammar();
        let (p, log) = grow_logged(&ts, &g, 5, 3).unwrap();
        assert_eq!(log.draws[0].what, "first tile");
        let first = &log.draws[0].options[log.draws[0].pick];
        assert!(ts.is_skeleton(first));
        assert_eq!(p.get(&TileAddress::Center).unwrap().type_id, *first);
        for (i, d) in log.draws.iter().enumerate() {
            assert_eq!(d.index, i);
            assert!(d.pick < d.options.len());
        }
        assert_eq!(log.lines().len(), log.draws.len() + 3);
    }

    #[test]
    fn grown_flowers_use_the_four_kinds() {
        let ts = mantilla_tileset();
        let g = shipped_grammar();
        let p = grow(&ts, &g, 3, 4).unwrap();
        let fl = flowers_of(&ts, &p).unwrap();
        assert!(!fl.is_empty());
        let centres: BTreeSet<&TileAddress> = fl.iter().map(|f| &f.centre).collect();
        for f in &fl {
            assert!(matches!(f.kind, FlowerKind::F | FlowerKind::Gl | FlowerKind::Gr | FlowerKind::Eight));
        }
        // every interior tile is a centre or the petal of some flower centre
        for pl in p.iter() {
            let n = neighbors(&pl.address).unwrap();
            if !n.iter().all(|b| p.contains(b)) {
                continue;
            }
            let is_centre = ts.get(&pl.type_id).unwrap().kind.is_centre();
            assert!(is_centre || n.iter().any(|b| p.get(b).is_some_and(|q| ts.get(&q.type_id).unwrap().kind.is_centre())));
            if is_centre {
                assert!(centres.contains(&pl.address));
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(12))]
        #[test]
        fn grown_patches_are_consistent(seed in any::<u64>(), radius in 0usize..4) {
            let ts = mantilla_tileset();
            let g = shipped_grammar();
            let p = grow(&ts, &g, seed, radius).unwrap();
            prop_assert!(check_patch(&ts, &p).unwrap().is_empty());
            prop_assert!(ball(&TileAddress::Center, radius).unwrap().iter().all(|a| p.contains(a)));
        }
    }
}
