//! Flower decomposition of a placed patch and the flower tree.
//!
//! Positions are read from tile kinds and rotations, never from colours, so
//! the same code serves tile sets whose petals carry extra marks.

use std::collections::{BTreeMap, BTreeSet};

use super::{centre_edge, classify_flower, FlowerKind, MantillaError};
use crate::heptagrid::TileAddress;
use crate::tiles::{KindTag, NeighborCache, Patch, TileSet, VertexMark};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Flower {
    pub centre: TileAddress,
    /// Neighbours of the centre in edge order.
    pub petals: [TileAddress; 7],
    pub kind: FlowerKind,
}

impl Flower {
    /// Petal carrying centre number `k` (1..=7).
    pub fn petal(&self, rotation: u8, k: usize) -> &TileAddress {
        &self.petals[(centre_edge(k) + rotation as usize) % 7]
    }
}

/// Centre number (1..=7) of local edge `l`.
pub fn number_of_edge(l: usize) -> usize {
    match (8 - l % 7) % 7 {
        0 => 7,
        k => k,
    }
}

/// Read-only view of a patch with cached adjacency.
pub struct View<'a> {
    pub ts: &'a TileSet,
    pub patch: &'a Patch,
    cache: std::cell::RefCell<NeighborCache>,
}

impl<'a> View<'a> {
    pub fn new(ts: &'a TileSet, patch: &'a Patch) -> View<'a> {
        View { ts, patch, cache: Default::default() }
    }

    pub fn neighbors(&self, a: &TileAddress) -> Result<[TileAddress; 7], MantillaError> {
        Ok(self.cache.borrow_mut().get(a)?.clone())
    }

    pub fn kind(&self, a: &TileAddress) -> Option<KindTag> {
        let pl = self.patch.get(a)?;
        self.ts.get(&pl.type_id).map(|t| t.kind)
    }

    pub fn is_centre(&self, a: &TileAddress) -> bool {
        self.kind(a).is_some_and(|k| k.is_centre())
    }

    pub fn is_petal(&self, a: &TileAddress) -> bool {
        self.kind(a) == Some(KindTag::Petal)
    }

    fn rotation(&self, a: &TileAddress) -> u8 {
        self.patch.get(a).map(|p| p.rotation).unwrap_or(0)
    }

    /// Address of the petal at number `k` of the centre at `c`.
    pub fn numbered(&self, c: &TileAddress, k: usize) -> Result<TileAddress, MantillaError> {
        let n = self.neighbors(c)?;
        Ok(n[(centre_edge(k) + self.rotation(c) as usize) % 7].clone())
    }

    /// Number by which the centre at `c` sees its neighbour `b`.
    pub fn number_towards(&self, c: &TileAddress, b: &TileAddress) -> Result<Option<usize>, MantillaError> {
        let n = self.neighbors(c)?;
        Ok(n.iter().position(|x| x == b).map(|e| {
            number_of_edge((e + 7 - self.rotation(c) as usize % 7) % 7)
        }))
    }

    pub fn is_interior(&self, a: &TileAddress) -> Result<bool, MantillaError> {
        Ok(self.patch.contains(a) && self.neighbors(a)?.iter().all(|b| self.patch.contains(b)))
    }

    /// Placed centres that hold petal `q` as a non-parental petal, in
    /// address order.
    pub fn owners(&self, q: &TileAddress) -> Result<Vec<TileAddress>, MantillaError> {
        let mut out = Vec::new();
        for c in self.neighbors(q)? {
            if self.is_centre(&c) {
                if let Some(k) = self.number_towards(&c, q)? {
                    if (2..=6).contains(&k) {
                        out.push(c);
                    }
                }
            }
        }
        Ok(out)
    }

    /// The junction tile between consecutive petals `k` and `k+1` of the
    /// centre `c`, and whether the vertex they share there is red.
    pub fn junction(&self, c: &TileAddress, k: usize) -> Result<(TileAddress, bool), MantillaError> {
        let pa = self.numbered(c, k)?;
        let pb = self.numbered(c, k % 7 + 1)?;
        let na = self.neighbors(&pa)?;
        let e = na.iter().position(|x| *x == pb).expect("consecutive petals are adjacent");
        // the vertex of pa on edge e away from the centre
        let (v, j) = if na[(e + 1) % 7] == *c { ((e + 6) % 7, na[(e + 6) % 7].clone()) } else { (e, na[(e + 1) % 7].clone()) };
        let red = match self.patch.get(&pa) {
            Some(pl) => self.ts.get(&pl.type_id).is_some_and(|t| t.vertex_at(pl.rotation, v) == VertexMark::Red),
            None => false,
        };
        Ok((j, red))
    }

    /// Classifies the flower around an interior centre.
    pub fn flower(&self, c: &TileAddress) -> Result<Flower, MantillaError> {
        let petals = self.neighbors(c)?;
        if let Some(b) = petals.iter().find(|b| !self.is_petal(b)) {
            return Err(MantillaError::NotAMantilla(format!("centre {} touches non-petal {}", c, b)));
        }
        let mut reds = Vec::new();
        for k in 1..=7 {
            if self.junction(c, k)?.1 {
                reds.push(k);
            }
        }
        let gap = match reds.as_slice() {
            [a, b] => {
                let d = (b - a) as u8;
                Some(d.min(7 - d))
            }
            _ => None,
        };
        // the count reported to the classifier is of plain junction triples
        let plain = 3u8.checked_sub(reds.len() as u8).ok_or_else(|| {
            MantillaError::NotAMantilla(format!("{} red junctions around {}", reds.len(), c))
        })?;
        let classified = classify_flower(plain, gap)?;
        let tile = self.kind(c).and_then(FlowerKind::from_tag).expect("checked centre");
        let kind = match (classified, tile) {
            (FlowerKind::Gl, FlowerKind::Gl | FlowerKind::Gr) => tile,
            (a, b) if a == b => a,
            (FlowerKind::Seven | FlowerKind::Ten, _) => {
                return Err(MantillaError::NotAMantilla(format!("{}-flower at {}", classified, c)))
            }
            (a, b) => {
                return Err(MantillaError::NotAMantilla(format!(
                    "centre {} of type {} has a {} red configuration",
                    c, b, a
                )))
            }
        };
        Ok(Flower { centre: c.clone(), petals, kind })
    }
}

/// Decomposes the interior of `p` into flowers.
pub fn flowers_of(ts: &TileSet, p: &Patch) -> Result<Vec<Flower>, MantillaError> {
    let v = View::new(ts, p);
    let mut out = Vec::new();
    let mut covered = BTreeSet::new();
    for a in p.addresses() {
        if v.is_centre(a) && v.is_interior(a)? {
            let f = v.flower(a)?;
            covered.extend(f.petals.iter().cloned());
            out.push(f);
        }
    }
    for a in p.addresses() {
        if v.is_interior(a)? && !v.is_centre(a) && !covered.contains(a) {
            // a petal is covered by any adjacent centre, interior or not
            if !v.neighbors(a)?.iter().any(|b| v.is_centre(b)) {
                return Err(MantillaError::NotAMantilla(format!("{} belongs to no flower", a)));
            }
        }
    }
    Ok(out)
}

/// Parent links of the flower tree: a centre hangs from the owner of its
/// first petal. A petal held by two centres belongs to the 8 among them.
#[derive(Debug, Clone, Default)]
pub struct FlowerTree {
    pub kind: BTreeMap<TileAddress, FlowerKind>,
    pub parent: BTreeMap<TileAddress, TileAddress>,
    pub children: BTreeMap<TileAddress, Vec<TileAddress>>,
    /// Owning centre of every owned petal.
    pub owner: BTreeMap<TileAddress, TileAddress>,
}

impl FlowerTree {
    pub fn build(ts: &TileSet, p: &Patch) -> Result<FlowerTree, MantillaError> {
        let v = View::new(ts, p);
        let mut t = FlowerTree::default();
        for pl in p.iter() {
            let a = &pl.address;
            if let Some(k) = v.kind(a).and_then(FlowerKind::from_tag) {
                t.kind.insert(a.clone(), k);
            } else if v.is_petal(a) {
                let os = v.owners(a)?;
                // a shared petal goes to the 8 holding it
                let eight = os.iter().find(|c| v.kind(c) == Some(KindTag::Centre8));
                if let Some(o) = eight.or(os.first()).cloned() {
                    t.owner.insert(a.clone(), o);
                }
            }
        }
        for c in t.kind.keys() {
            let q = v.numbered(c, 1)?;
            if let Some(o) = t.owner.get(&q) {
                t.parent.insert(c.clone(), o.clone());
                t.children.entry(o.clone()).or_default().push(c.clone());
            }
        }
        for c in t.kind.keys() {
            let mut seen = BTreeSet::new();
            let mut x = c;
            while let Some(up) = t.parent.get(x) {
                if !seen.insert(x.clone()) {
                    return Err(MantillaError::NotAMantilla(format!("flower tree cycle through {}", c)));
                }
                x = up;
            }
        }
        Ok(t)
    }

    pub fn is_ancestor(&self, a: &TileAddress, d: &TileAddress) -> bool {
        let mut x = d;
        loop {
            if x == a {
                return true;
            }
            match self.parent.get(x) {
                Some(u) => x = u,
                None => return false,
            }
        }
    }

    /// Centres of the subtree at `root`, including it.
    pub fn subtree(&self, root: &TileAddress) -> Vec<TileAddress> {
        let mut out = vec![root.clone()];
        let mut i = 0;
        while i < out.len() {
            if let Some(cs) = self.children.get(&out[i]) {
                out.extend(cs.iter().cloned());
            }
            i += 1;
        }
        out
    }

    /// Placed tiles owned by the subtree at `root`.
    pub fn area(&self, root: &TileAddress, p: &Patch) -> BTreeSet<TileAddress> {
        let centres: BTreeSet<TileAddress> = self.subtree(root).into_iter().collect();
        let mut out: BTreeSet<TileAddress> =
            centres.iter().filter(|c| p.contains(c)).cloned().collect();
        for (q, o) in &self.owner {
            if centres.contains(o) {
                out.insert(q.clone());
            }
        }
        out
    }

    /// Topmost ancestor of `c` inside the patch.
    pub fn top(&self, c: &TileAddress) -> TileAddress {
        let mut x = c;
        while let Some(u) = self.parent.get(x) {
            x = u;
        }
        x.clone()
    }
}
