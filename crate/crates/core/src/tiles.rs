//! Wang prototiles on heptagons and local consistency of patches.
//!
//! Abutting edges must carry equal colours, and the three tiles meeting at a
//! vertex must agree on its mark. Placements rotate a prototile; reflections
//! are not representable.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use crate::heptagrid::{neighbors, GridError, TileAddress};

pub mod format;
pub mod solver;

pub use solver::{
    complete_cells, solve_region, verify_unsat_certificate, Completion, SolveMode, SolveOutcome,
    UnsatCertificate, ValueOrder,
};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TileError {
    #[error("unknown tile type {0:?}")]
    UnknownTypeId(String),
    #[error("duplicate tile type {0:?}")]
    DuplicateTypeId(String),
    #[error("invalid tile set: {0}")]
    InvalidTileSet(String),
    #[error("partial patch is inconsistent ({0} violations)")]
    InconsistentPartial(usize),
    #[error("partial placement at {0} lies outside the region")]
    PartialOutsideRegion(TileAddress),
    #[error("malformed certificate: {0}")]
    MalformedCertificate(String),
    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Grid(#[from] GridError),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EdgeColor {
    Numbered { value: u8, overlined: bool },
    Petal(u16),
    Channel(String),
}

impl EdgeColor {
    pub fn num(value: u8) -> EdgeColor {
        EdgeColor::Numbered {
            value,
            overlined: false,
        }
    }

    pub fn bar(value: u8) -> EdgeColor {
        EdgeColor::Numbered {
            value,
            overlined: true,
        }
    }

    pub fn channel(sym: impl Into<String>) -> EdgeColor {
        EdgeColor::Channel(sym.into())
    }
}

impl fmt::Display for EdgeColor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EdgeColor::Numbered { value, overlined } => {
                write!(f, "N{}{}", value, if *overlined { "~" } else { "" })
            }
            EdgeColor::Petal(t) => write!(f, "P{}", t),
            EdgeColor::Channel(s) => write!(f, "CH:{}", s),
        }
    }
}

impl FromStr for EdgeColor {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if let Some(sym) = s.strip_prefix("CH:") {
            if sym.is_empty() || sym.contains([',', ' ', '\t']) {
                return Err(format!("bad channel symbol {:?}", s));
            }
            return Ok(EdgeColor::Channel(sym.to_string()));
        }
        if let Some(rest) = s.strip_prefix('N') {
            let (digits, overlined) = match rest.strip_suffix('~') {
                Some(d) => (d, true),
                None => (rest, false),
            };
            let value: u8 = parse_canonical(digits).ok_or_else(|| format!("bad colour {:?}", s))?;
            if !(1..=7).contains(&value) {
                return Err(format!("numbered colour out of range: {:?}", s));
            }
            return Ok(EdgeColor::Numbered { value, overlined });
        }
        if let Some(rest) = s.strip_prefix('P') {
            let tag = parse_canonical(rest).ok_or_else(|| format!("bad colour {:?}", s))?;
            return Ok(EdgeColor::Petal(tag));
        }
        Err(format!("bad colour {:?}", s))
    }
}

// Rejects leading zeros and signs so that printing is the exact inverse.
fn parse_canonical<T: FromStr + ToString>(s: &str) -> Option<T> {
    let v: T = s.parse().ok()?;
    (v.to_string() == s).then_some(v)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum VertexMark {
    Plain,
    Red,
}

impl VertexMark {
    pub fn symbol(self) -> char {
        match self {
            VertexMark::Plain => '.',
            VertexMark::Red => 'R',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum KindTag {
    CentreF,
    CentreGl,
    CentreGr,
    Centre8,
    Petal,
    Computation,
    Border,
}

impl KindTag {
    pub const ALL: [KindTag; 7] = [
        KindTag::CentreF,
        KindTag::CentreGl,
        KindTag::CentreGr,
        KindTag::Centre8,
        KindTag::Petal,
        KindTag::Computation,
        KindTag::Border,
    ];

    pub fn name(self) -> &'static str {
        match self {
            KindTag::CentreF => "CentreF",
            KindTag::CentreGl => "CentreGl",
            KindTag::CentreGr => "CentreGr",
            KindTag::Centre8 => "Centre8",
            KindTag::Petal => "Petal",
            KindTag::Computation => "Computation",
            KindTag::Border => "Border",
        }
    }

    pub fn is_centre(self) -> bool {
        matches!(
            self,
            KindTag::CentreF | KindTag::CentreGl | KindTag::CentreGr | KindTag::Centre8
        )
    }
}

impl FromStr for KindTag {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        KindTag::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown kind {:?}", s))
    }
}

/// A prototile. Vertex `i` lies between edges `i` and `i + 1`; both cycles run
/// counter-clockwise.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TileType {
    pub id: String,
    pub kind: KindTag,
    pub edges: [EdgeColor; 7],
    pub vertices: [VertexMark; 7],
}

impl TileType {
    /// Colour found at local edge `e` of a placement rotated by `rot`.
    pub fn edge_at(&self, rot: u8, e: usize) -> &EdgeColor {
        &self.edges[(e + 7 - rot as usize % 7) % 7]
    }

    pub fn vertex_at(&self, rot: u8, v: usize) -> VertexMark {
        self.vertices[(v + 7 - rot as usize % 7) % 7]
    }

    /// The type with its cycles shifted so that old edge `k` becomes edge 0.
    pub fn rotated_left(&self, k: usize) -> TileType {
        TileType {
            id: self.id.clone(),
            kind: self.kind,
            edges: std::array::from_fn(|i| self.edges[(i + k) % 7].clone()),
            vertices: std::array::from_fn(|i| self.vertices[(i + k) % 7]),
        }
    }
}

/// Lexicographically least rotation of `(edges, vertices)`.
pub fn canonical_rotation(t: &TileType) -> TileType {
    (0..7)
        .map(|k| t.rotated_left(k))
        .min_by(|a, b| (&a.edges, &a.vertices).cmp(&(&b.edges, &b.vertices)))
        .expect("seven rotations")
}

pub fn edge_matches(a: &EdgeColor, b: &EdgeColor) -> bool {
    a == b
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Placement {
    pub address: TileAddress,
    pub type_id: String,
    pub rotation: u8,
}

impl Placement {
    pub fn new(address: TileAddress, type_id: impl Into<String>, rotation: u8) -> Placement {
        Placement {
            address,
            type_id: type_id.into(),
            rotation: rotation % 7,
        }
    }
}

/// A finite set of placements keyed by address.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Patch {
    entries: BTreeMap<TileAddress, Placement>,
}

impl Patch {
    pub fn new() -> Patch {
        Patch::default()
    }

    /// Inserts a placement, returning the one it replaced.
    pub fn insert(&mut self, p: Placement) -> Option<Placement> {
        self.entries.insert(p.address.clone(), p)
    }

    pub fn remove(&mut self, a: &TileAddress) -> Option<Placement> {
        self.entries.remove(a)
    }

    pub fn get(&self, a: &TileAddress) -> Option<&Placement> {
        self.entries.get(a)
    }

    pub fn contains(&self, a: &TileAddress) -> bool {
        self.entries.contains_key(a)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Placement> {
        self.entries.values()
    }

    pub fn addresses(&self) -> impl Iterator<Item = &TileAddress> {
        self.entries.keys()
    }

    /// True when every placement of `other` is present, unchanged, in `self`.
    pub fn extends(&self, other: &Patch) -> bool {
        other.iter().all(|p| self.get(&p.address) == Some(p))
    }
}

impl FromIterator<Placement> for Patch {
    fn from_iter<I: IntoIterator<Item = Placement>>(iter: I) -> Self {
        let mut p = Patch::new();
        for x in iter {
            p.insert(x);
        }
        p
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TileSet {
    pub name: String,
    pub types: Vec<TileType>,
    pub skeleton: Vec<String>,
    index: HashMap<String, usize>,
}

impl TileSet {
    pub fn new(
        name: impl Into<String>,
        types: Vec<TileType>,
        skeleton: Vec<String>,
    ) -> Result<TileSet, TileError> {
        if types.is_empty() {
            return Err(TileError::InvalidTileSet("no tile types".into()));
        }
        let mut index = HashMap::new();
        for (i, t) in types.iter().enumerate() {
            if t.id.is_empty() || t.id.contains(char::is_whitespace) || t.id.contains(',') {
                return Err(TileError::InvalidTileSet(format!("bad tile id {:?}", t.id)));
            }
            if index.insert(t.id.clone(), i).is_some() {
                return Err(TileError::DuplicateTypeId(t.id.clone()));
            }
        }
        for s in &skeleton {
            if !index.contains_key(s) {
                return Err(TileError::InvalidTileSet(format!(
                    "skeleton id {:?} is not a tile type",
                    s
                )));
            }
        }
        Ok(TileSet {
            name: name.into(),
            types,
            skeleton,
            index,
        })
    }

    pub fn get(&self, id: &str) -> Option<&TileType> {
        self.index.get(id).map(|&i| &self.types[i])
    }

    pub fn position(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn require(&self, id: &str) -> Result<&TileType, TileError> {
        self.get(id).ok_or_else(|| TileError::UnknownTypeId(id.to_string()))
    }

    pub fn is_skeleton(&self, id: &str) -> bool {
        self.skeleton.iter().any(|s| s == id)
    }

    /// Union of two tile sets; types of `other` whose ids already exist are
    /// rejected.
    pub fn merged(&self, name: &str, other: &TileSet) -> Result<TileSet, TileError> {
        let mut types = self.types.clone();
        types.extend(other.types.iter().cloned());
        let mut skeleton = self.skeleton.clone();
        skeleton.extend(other.skeleton.iter().cloned());
        TileSet::new(name, types, skeleton)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    Edge {
        a: TileAddress,
        edge_a: usize,
        b: TileAddress,
        edge_b: usize,
    },
    Vertex {
        /// Present tiles around the vertex, with their local vertex index.
        tiles: Vec<(TileAddress, usize, VertexMark)>,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Edge { a, edge_a, b, edge_b } => {
                write!(f, "edge {}#{} / {}#{}", a, edge_a, b, edge_b)
            }
            Violation::Vertex { tiles } => {
                write!(f, "vertex")?;
                for (a, v, m) in tiles {
                    write!(f, " {}@{}={}", a, v, m.symbol())?;
                }
                Ok(())
            }
        }
    }
}

/// Neighbour lookups with memoisation; patches revisit the same tiles often.
#[derive(Default)]
pub struct NeighborCache {
    map: HashMap<TileAddress, [TileAddress; 7]>,
}

impl NeighborCache {
    pub fn get(&mut self, a: &TileAddress) -> Result<&[TileAddress; 7], GridError> {
        if !self.map.contains_key(a) {
            let n = neighbors(a)?;
            self.map.insert(a.clone(), n);
        }
        Ok(&self.map[a])
    }

    pub fn edge_towards(&mut self, b: &TileAddress, a: &TileAddress) -> Result<usize, GridError> {
        self.get(b)?
            .iter()
            .position(|n| n == a)
            .ok_or_else(|| GridError::InvalidAddress(format!("{} is not adjacent to {}", b, a)))
    }
}

/// Every edge and vertex disagreement among the placed tiles of `p`.
pub fn check_patch(ts: &TileSet, p: &Patch) -> Result<Vec<Violation>, TileError> {
    let mut cache = NeighborCache::default();
    check_patch_with(ts, p, &mut cache)
}

pub fn check_patch_with(
    ts: &TileSet,
    p: &Patch,
    cache: &mut NeighborCache,
) -> Result<Vec<Violation>, TileError> {
    for pl in p.iter() {
        ts.require(&pl.type_id)?;
    }
    let mut out = Vec::new();
    let mut seen_vertices: HashSet<Vec<TileAddress>> = HashSet::new();
    for pl in p.iter() {
        let a = &pl.address;
        let ta = ts.require(&pl.type_id)?;
        let na = cache.get(a)?.clone();
        for e in 0..7 {
            let b = &na[e];
            if let Some(pb) = p.get(b) {
                if a < b {
                    let tb = ts.require(&pb.type_id)?;
                    let j = cache.edge_towards(b, a)?;
                    if !edge_matches(ta.edge_at(pl.rotation, e), tb.edge_at(pb.rotation, j)) {
                        out.push(Violation::Edge {
                            a: a.clone(),
                            edge_a: e,
                            b: b.clone(),
                            edge_b: j,
                        });
                    }
                }
            }
            // vertex e sits between edges e and e+1
            let c = &na[(e + 1) % 7];
            let mut key = vec![a.clone(), b.clone(), c.clone()];
            key.sort();
            if seen_vertices.contains(&key) {
                continue;
            }
            let mut around = vec![(a.clone(), e, ta.vertex_at(pl.rotation, e))];
            if let Some(pb) = p.get(b) {
                let jb = cache.edge_towards(b, a)?;
                let v = (jb + 6) % 7;
                around.push((b.clone(), v, ts.require(&pb.type_id)?.vertex_at(pb.rotation, v)));
            }
            if let Some(pc) = p.get(c) {
                let v = cache.edge_towards(c, a)?;
                around.push((c.clone(), v, ts.require(&pc.type_id)?.vertex_at(pc.rotation, v)));
            }
            seen_vertices.insert(key);
            if around.iter().any(|x| x.2 != around[0].2) {
                around.sort();
                out.push(Violation::Vertex { tiles: around });
            }
        }
    }
    Ok(out)
}

/// Stable 64-bit FNV-1a digest used to bind certificates to their inputs.
pub(crate) fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tile(id: &str, edges: [EdgeColor; 7]) -> TileType {
        TileType {
            id: id.into(),
            kind: KindTag::Computation,
            edges,
            vertices: [VertexMark::Plain; 7],
        }
    }

    #[test]
    fn matching_is_colour_equality() {
        assert!(edge_matches(&EdgeColor::bar(3), &EdgeColor::bar(3)));
        assert!(!edge_matches(&EdgeColor::num(3), &EdgeColor::bar(3)));
        assert!(!edge_matches(&EdgeColor::Petal(1), &EdgeColor::channel("x")));
    }

    #[test]
    fn canonical_rotation_examples() {
        let mono = tile("m", std::array::from_fn(|_| EdgeColor::num(1)));
        assert_eq!(canonical_rotation(&mono), mono);

        let mut e: [EdgeColor; 7] = std::array::from_fn(|_| EdgeColor::num(1));
        e[0] = EdgeColor::num(2);
        let t = tile("t", e);
        let c = canonical_rotation(&t);
        let mut want: [EdgeColor; 7] = std::array::from_fn(|_| EdgeColor::num(1));
        want[6] = EdgeColor::num(2);
        assert_eq!(c.edges, want);
        assert_eq!(canonical_rotation(&c), c);
    }

    #[test]
    fn rotation_moves_colours_counter_clockwise() {
        let t = tile("t", std::array::from_fn(|i| EdgeColor::num(i as u8 + 1)));
        assert_eq!(*t.edge_at(0, 0), EdgeColor::num(1));
        assert_eq!(*t.edge_at(1, 1), EdgeColor::num(1));
        assert_eq!(*t.edge_at(3, 0), EdgeColor::num(5));
    }

    #[test]
    fn empty_patch_is_consistent() {
        let ts = TileSet::new("t", vec![tile("a", std::array::from_fn(|_| EdgeColor::num(1)))], vec![])
            .unwrap();
        assert!(check_patch(&ts, &Patch::new()).unwrap().is_empty());
    }

    #[test]
    fn one_edge_violation() {
        let two = tile("two", std::array::from_fn(|_| EdgeColor::num(2)));
        let three = tile("three", std::array::from_fn(|_| EdgeColor::num(3)));
        let ts = TileSet::new("t", vec![two, three], vec![]).unwrap();
        let p: Patch = [
            Placement::new(TileAddress::Center, "two", 0),
            Placement::new(TileAddress::sector_root(0), "three", 0),
        ]
        .into_iter()
        .collect();
        let v = check_patch(&ts, &p).unwrap();
        assert_eq!(v.len(), 1);
        assert!(matches!(v[0], Violation::Edge { .. }));
    }

    #[test]
    fn vertex_marks_must_agree() {
        let plain = tile("plain", std::array::from_fn(|_| EdgeColor::num(1)));
        let mut red = plain.clone();
        red.id = "red".into();
        red.vertices[0] = VertexMark::Red;
        let ts = TileSet::new("t", vec![plain, red], vec![]).unwrap();
        // vertex 0 of the centre is shared with sector roots 0 and 1
        let p: Patch = [
            Placement::new(TileAddress::Center, "red", 0),
            Placement::new(TileAddress::sector_root(0), "plain", 0),
        ]
        .into_iter()
        .collect();
        let v = check_patch(&ts, &p).unwrap();
        assert_eq!(v.len(), 1, "{:?}", v);
        assert!(matches!(v[0], Violation::Vertex { .. }));
    }

    #[test]
    fn unknown_type_is_an_error() {
        let ts = TileSet::new("t", vec![tile("a", std::array::from_fn(|_| EdgeColor::num(1)))], vec![])
            .unwrap();
        let p: Patch = [Placement::new(TileAddress::Center, "zz", 0)].into_iter().collect();
        assert_eq!(check_patch(&ts, &p), Err(TileError::UnknownTypeId("zz".into())));
    }
}
