//! Combinatorial model of the ternary heptagrid {7,3}.
//!
//! The plane is split into a central tile and seven sectors. Each sector is
//! spanned by a Fibonacci tree whose white nodes (`W`) have three sons
//! `[B, W, W]` and whose black nodes (`B`) have two sons `[B, W]`. A tile is
//! addressed by its sector and the path of son indices from the sector root.
//!
//! Depth `k` of a sector tree is ring `k + 1` around the central tile, and the
//! nodes of a ring, read sector after sector and left to right inside each
//! sector, run counter-clockwise around the centre. Neighbours are computed
//! from that ring numbering.

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::fmt;
use std::str::FromStr;

pub mod fibtree;
pub mod geometry;

pub use fibtree::{OrientedTree, TreeNode};

/// Deepest sector path the ring arithmetic supports.
pub const MAX_DEPTH: usize = 40;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GridError {
    #[error("invalid address: {0}")]
    InvalidAddress(String),
    #[error("the central tile has no node kind")]
    CenterHasNoKind,
    #[error("{0} has no parent")]
    NoParent(TileAddress),
    #[error("child index {index} out of range for {kind:?} node {at}")]
    BadChildIndex {
        at: TileAddress,
        kind: NodeKind,
        index: u8,
    },
    #[error("cannot parse address {0:?}")]
    Parse(String),
    #[error("numerical instability: tiles {0} and {1} are too close to separate")]
    NumericalInstability(TileAddress, TileAddress),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NodeKind {
    W,
    B,
}

impl NodeKind {
    pub fn arity(self) -> u8 {
        match self {
            NodeKind::W => 3,
            NodeKind::B => 2,
        }
    }

    pub fn children(self) -> &'static [NodeKind] {
        match self {
            NodeKind::W => &[NodeKind::B, NodeKind::W, NodeKind::W],
            NodeKind::B => &[NodeKind::B, NodeKind::W],
        }
    }

    pub fn child(self, index: u8) -> Option<NodeKind> {
        self.children().get(index as usize).copied()
    }
}

/// A tile of the heptagrid.
///
/// The derived ordering (centre first, then sector, then path) is the
/// lexicographic address order used wherever a deterministic tie-break is
/// needed.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TileAddress {
    Center,
    Sectored { sector: u8, path: Vec<u8> },
}

impl TileAddress {
    pub fn sector_root(sector: u8) -> TileAddress {
        TileAddress::Sectored {
            sector,
            path: Vec::new(),
        }
    }

    /// Builds a sectored address, checking sector range and son arities.
    pub fn new(sector: u8, path: Vec<u8>) -> Result<TileAddress, GridError> {
        let a = TileAddress::Sectored { sector, path };
        a.validate()?;
        Ok(a)
    }

    pub fn validate(&self) -> Result<(), GridError> {
        match self {
            TileAddress::Center => Ok(()),
            TileAddress::Sectored { sector, path } => {
                if *sector >= 7 || path.len() > MAX_DEPTH {
                    return Err(GridError::InvalidAddress(self.to_string()));
                }
                let mut kind = NodeKind::W;
                for &i in path {
                    kind = kind
                        .child(i)
                        .ok_or_else(|| GridError::InvalidAddress(self.to_string()))?;
                }
                Ok(())
            }
        }
    }

    pub fn is_center(&self) -> bool {
        matches!(self, TileAddress::Center)
    }

    pub fn sector(&self) -> Option<u8> {
        match self {
            TileAddress::Center => None,
            TileAddress::Sectored { sector, .. } => Some(*sector),
        }
    }

    pub fn path(&self) -> &[u8] {
        match self {
            TileAddress::Center => &[],
            TileAddress::Sectored { path, .. } => path,
        }
    }

    /// Distance from the central tile.
    pub fn ring(&self) -> usize {
        match self {
            TileAddress::Center => 0,
            TileAddress::Sectored { path, .. } => path.len() + 1,
        }
    }

    pub fn child(&self, index: u8) -> Result<TileAddress, GridError> {
        tree_step(self, TreeStep::Down(index))
    }

    pub fn parent(&self) -> Result<TileAddress, GridError> {
        tree_step(self, TreeStep::Up)
    }

    /// True when `self` lies in the sector subtree rooted at `root`.
    pub fn is_descendant_of(&self, root: &TileAddress) -> bool {
        match (self, root) {
            (_, TileAddress::Center) => true,
            (TileAddress::Center, _) => false,
            (
                TileAddress::Sectored { sector: s, path: p },
                TileAddress::Sectored { sector: rs, path: rp },
            ) => s == rs && p.starts_with(rp),
        }
    }
}

impl fmt::Display for TileAddress {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TileAddress::Center => write!(f, "C"),
            TileAddress::Sectored { sector, path } => {
                write!(f, "s:{}/", sector)?;
                for (k, i) in path.iter().enumerate() {
                    if k > 0 {
                        write!(f, ".")?;
                    }
                    write!(f, "{}", i)?;
                }
                Ok(())
            }
        }
    }
}

impl FromStr for TileAddress {
    type Err = GridError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "C" {
            return Ok(TileAddress::Center);
        }
        let bad = || GridError::Parse(s.to_string());
        let rest = s.strip_prefix("s:").ok_or_else(bad)?;
        let (sector, path) = rest.split_once('/').ok_or_else(bad)?;
        if sector.len() != 1 {
            return Err(bad());
        }
        let sector: u8 = sector.parse().map_err(|_| bad())?;
        let path = if path.is_empty() {
            Vec::new()
        } else {
            path.split('.')
                .map(|t| {
                    if t.len() == 1 {
                        t.parse::<u8>().map_err(|_| bad())
                    } else {
                        Err(bad())
                    }
                })
                .collect::<Result<Vec<_>, _>>()?
        };
        TileAddress::new(sector, path)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TreeStep {
    Up,
    Down(u8),
}

pub fn node_kind(a: &TileAddress) -> Result<NodeKind, GridError> {
    match a {
        TileAddress::Center => Err(GridError::CenterHasNoKind),
        TileAddress::Sectored { path, .. } => {
            let mut kind = NodeKind::W;
            for &i in path {
                kind = kind
                    .child(i)
                    .ok_or_else(|| GridError::InvalidAddress(a.to_string()))?;
            }
            Ok(kind)
        }
    }
}

pub fn tree_step(a: &TileAddress, step: TreeStep) -> Result<TileAddress, GridError> {
    match (a, step) {
        (TileAddress::Center, _) => Err(GridError::NoParent(a.clone())),
        (TileAddress::Sectored { path, .. }, TreeStep::Up) if path.is_empty() => {
            Err(GridError::NoParent(a.clone()))
        }
        (TileAddress::Sectored { sector, path }, TreeStep::Up) => Ok(TileAddress::Sectored {
            sector: *sector,
            path: path[..path.len() - 1].to_vec(),
        }),
        (TileAddress::Sectored { sector, path }, TreeStep::Down(index)) => {
            let kind = node_kind(a)?;
            if index >= kind.arity() {
                return Err(GridError::BadChildIndex {
                    at: a.clone(),
                    kind,
                    index,
                });
            }
            if path.len() >= MAX_DEPTH {
                return Err(GridError::InvalidAddress(a.to_string()));
            }
            let mut path = path.clone();
            path.push(index);
            Ok(TileAddress::Sectored {
                sector: *sector,
                path,
            })
        }
    }
}

const fn width_table() -> [[u64; MAX_DEPTH + 2]; 2] {
    // [W, B] x depth: number of descendants at relative depth d.
    let mut t = [[0u64; MAX_DEPTH + 2]; 2];
    t[0][0] = 1;
    t[1][0] = 1;
    let mut d = 1;
    while d < MAX_DEPTH + 2 {
        t[0][d] = t[1][d - 1] + 2 * t[0][d - 1];
        t[1][d] = t[1][d - 1] + t[0][d - 1];
        d += 1;
    }
    t
}

static WIDTHS: [[u64; MAX_DEPTH + 2]; 2] = width_table();

fn width(kind: NodeKind, depth: usize) -> u64 {
    WIDTHS[kind as usize][depth]
}

/// Number of nodes at depth `n` of one sector tree.
pub fn level_count(n: usize) -> u64 {
    assert!(n <= MAX_DEPTH, "depth {} beyond supported range", n);
    width(NodeKind::W, n)
}

/// Number of tiles at distance exactly `n` from the central tile.
pub fn ring_size(n: usize) -> u64 {
    if n == 0 {
        1
    } else {
        7 * level_count(n - 1)
    }
}

/// Position of an address in its ring, counted counter-clockwise from the
/// leftmost node of sector 0.
pub fn ring_index(a: &TileAddress) -> (usize, u64) {
    match a {
        TileAddress::Center => (0, 0),
        TileAddress::Sectored { sector, path } => {
            let depth = path.len();
            let mut kind = NodeKind::W;
            let mut idx = 0u64;
            for (j, &c) in path.iter().enumerate() {
                let below = depth - j - 1;
                for &sib in &kind.children()[..c as usize] {
                    idx += width(sib, below);
                }
                kind = kind.children()[c as usize];
            }
            (depth + 1, *sector as u64 * level_count(depth) + idx)
        }
    }
}

/// Inverse of [`ring_index`].
pub fn from_ring_index(ring: usize, index: u64) -> TileAddress {
    if ring == 0 {
        return TileAddress::Center;
    }
    let depth = ring - 1;
    let per_sector = level_count(depth);
    let index = index % (7 * per_sector);
    let sector = (index / per_sector) as u8;
    let mut rem = index % per_sector;
    let mut kind = NodeKind::W;
    let mut path = Vec::with_capacity(depth);
    for j in 0..depth {
        let below = depth - j - 1;
        for (c, &child) in kind.children().iter().enumerate() {
            let w = width(child, below);
            if rem < w {
                path.push(c as u8);
                kind = child;
                break;
            }
            rem -= w;
        }
    }
    TileAddress::Sectored { sector, path }
}

fn ring_shift(a: &TileAddress, delta: i64) -> TileAddress {
    let (ring, idx) = ring_index(a);
    let size = ring_size(ring) as i64;
    let shifted = (idx as i64 + delta).rem_euclid(size) as u64;
    from_ring_index(ring, shifted)
}

/// The seven neighbours of `a`, in counter-clockwise edge order.
///
/// For the centre, edge `k` faces the root of sector `k`. For any other tile,
/// edge 0 faces its tree parent and the remaining edges follow
/// counter-clockwise:
///
/// * white node: parent, left, son 0, son 1, son 2, first son of right, right
/// * black node: parent, left of parent, left, son 0, son 1, first son of right, right
pub fn neighbors(a: &TileAddress) -> Result<[TileAddress; 7], GridError> {
    a.validate()?;
    if a.path().len() >= MAX_DEPTH {
        return Err(GridError::InvalidAddress(a.to_string()));
    }
    Ok(neighbors_unchecked(a))
}

fn neighbors_unchecked(a: &TileAddress) -> [TileAddress; 7] {
    match a {
        TileAddress::Center => std::array::from_fn(|k| TileAddress::sector_root(k as u8)),
        TileAddress::Sectored { sector, path } => {
            let parent = if path.is_empty() {
                TileAddress::Center
            } else {
                TileAddress::Sectored {
                    sector: *sector,
                    path: path[..path.len() - 1].to_vec(),
                }
            };
            let left = ring_shift(a, -1);
            let right = ring_shift(a, 1);
            let son = |i: u8| {
                let mut p = path.clone();
                p.push(i);
                TileAddress::Sectored {
                    sector: *sector,
                    path: p,
                }
            };
            let extra = match &right {
                TileAddress::Sectored { sector, path } => {
                    let mut p = path.clone();
                    p.push(0);
                    TileAddress::Sectored {
                        sector: *sector,
                        path: p,
                    }
                }
                TileAddress::Center => unreachable!(),
            };
            match node_kind(a).expect("validated address") {
                NodeKind::W => [parent, left, son(0), son(1), son(2), extra, right],
                NodeKind::B => {
                    let up_left = ring_shift(&parent, -1);
                    [parent, up_left, left, son(0), son(1), extra, right]
                }
            }
        }
    }
}

/// Edge of `b` that faces `a`, if the two tiles are adjacent.
pub fn edge_towards(b: &TileAddress, a: &TileAddress) -> Option<usize> {
    neighbors(b).ok()?.iter().position(|n| n == a)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Region {
    Ball { center: TileAddress, radius: usize },
    SectorTree { root: TileAddress, depth: usize },
    Explicit(BTreeSet<TileAddress>),
}

impl Region {
    /// Member tiles in lexicographic address order.
    pub fn tiles(&self) -> Result<Vec<TileAddress>, GridError> {
        match self {
            Region::Ball { center, radius } => Ok(ball(center, *radius)?.into_iter().collect()),
            Region::SectorTree { root, depth } => {
                root.validate()?;
                let root = match root {
                    TileAddress::Center => {
                        return Err(GridError::InvalidAddress("C as sector-tree root".into()))
                    }
                    r => r.clone(),
                };
                let mut out = Vec::new();
                let mut frontier = vec![root];
                for _ in 0..*depth {
                    let mut next = Vec::new();
                    for t in &frontier {
                        let kind = node_kind(t)?;
                        for i in 0..kind.arity() {
                            next.push(t.child(i)?);
                        }
                    }
                    out.append(&mut frontier);
                    frontier = next;
                }
                out.sort();
                Ok(out)
            }
            Region::Explicit(set) => {
                for a in set {
                    a.validate()?;
                }
                Ok(set.iter().cloned().collect())
            }
        }
    }

    pub fn contains(&self, a: &TileAddress) -> bool {
        match self {
            Region::Ball { center, radius } => graph_distance(center, a)
                .map(|d| d <= *radius)
                .unwrap_or(false),
            Region::SectorTree { root, depth } => {
                a.is_descendant_of(root)
                    && !root.is_center()
                    && a.path().len() < root.path().len() + depth
            }
            Region::Explicit(set) => set.contains(a),
        }
    }
}

/// All tiles within graph distance `radius` of `center`, by breadth-first
/// expansion over [`neighbors`].
pub fn ball(center: &TileAddress, radius: usize) -> Result<BTreeSet<TileAddress>, GridError> {
    center.validate()?;
    Ok(distances_from(center, radius)?.into_keys().collect())
}

/// Breadth-first distances from `center` up to `radius`.
pub fn distances_from(
    center: &TileAddress,
    radius: usize,
) -> Result<HashMap<TileAddress, usize>, GridError> {
    let mut dist = HashMap::new();
    dist.insert(center.clone(), 0);
    let mut queue = VecDeque::from([center.clone()]);
    while let Some(t) = queue.pop_front() {
        let d = dist[&t];
        if d == radius {
            continue;
        }
        for n in neighbors(&t)? {
            if !dist.contains_key(&n) {
                dist.insert(n.clone(), d + 1);
                queue.push_back(n);
            }
        }
    }
    Ok(dist)
}

/// Length of the shortest neighbour path from `a` to `b`.
pub fn graph_distance(a: &TileAddress, b: &TileAddress) -> Result<usize, GridError> {
    a.validate()?;
    b.validate()?;
    if a == b {
        return Ok(0);
    }
    // Both tiles are within ring(a) + ring(b) of each other via the centre.
    let bound = a.ring() + b.ring();
    let mut seen = HashMap::new();
    seen.insert(a.clone(), 0usize);
    let mut queue = VecDeque::from([a.clone()]);
    while let Some(t) = queue.pop_front() {
        let d = seen[&t];
        if d >= bound {
            continue;
        }
        for n in neighbors(&t)? {
            if n == *b {
                return Ok(d + 1);
            }
            if !seen.contains_key(&n) {
                seen.insert(n.clone(), d + 1);
                queue.push_back(n);
            }
        }
    }
    unreachable!("tiles are always connected through the centre")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn addr(s: &str) -> TileAddress {
        s.parse().unwrap()
    }

    #[test]
    fn node_kinds_follow_son_rules() {
        assert_eq!(node_kind(&addr("s:0/")).unwrap(), NodeKind::W);
        assert_eq!(node_kind(&addr("s:0/0")).unwrap(), NodeKind::B);
        assert_eq!(node_kind(&addr("s:0/0.1")).unwrap(), NodeKind::W);
        assert_eq!(node_kind(&TileAddress::Center), Err(GridError::CenterHasNoKind));
        assert!(matches!(
            TileAddress::new(0, vec![0, 2]),
            Err(GridError::InvalidAddress(_))
        ));
    }

    #[test]
    fn tree_steps() {
        assert_eq!(
            tree_step(&addr("s:0/"), TreeStep::Down(2)).unwrap(),
            addr("s:0/2")
        );
        assert_eq!(tree_step(&addr("s:3/1"), TreeStep::Up).unwrap(), addr("s:3/"));
        assert!(matches!(
            tree_step(&addr("s:0/0"), TreeStep::Down(2)),
            Err(GridError::BadChildIndex { .. })
        ));
        assert!(matches!(
            tree_step(&addr("s:4/"), TreeStep::Up),
            Err(GridError::NoParent(_))
        ));
        assert!(matches!(
            tree_step(&TileAddress::Center, TreeStep::Up),
            Err(GridError::NoParent(_))
        ));
    }

    #[test]
    fn level_counts_are_odd_fibonacci_numbers() {
        let got: Vec<u64> = (0..5).map(level_count).collect();
        assert_eq!(got, vec![1, 3, 8, 21, 55]);
        // direct expansion of the son rules
        let mut level = vec![NodeKind::W];
        for n in 0..=12 {
            assert_eq!(level.len() as u64, level_count(n));
            level = level.iter().flat_map(|k| k.children().iter().copied()).collect();
        }
    }

    #[test]
    fn centre_neighbours_are_sector_roots() {
        let n = neighbors(&TileAddress::Center).unwrap();
        for (k, a) in n.iter().enumerate() {
            assert_eq!(*a, TileAddress::sector_root(k as u8));
        }
    }

    #[test]
    fn adjacent_sector_roots_share_an_edge() {
        let n = neighbors(&addr("s:0/")).unwrap();
        assert!(n.contains(&addr("s:1/")));
        assert!(n.contains(&addr("s:6/")));
    }

    #[test]
    fn symmetry_spot_check() {
        let a = addr("s:0/1");
        for b in neighbors(&a).unwrap() {
            assert!(neighbors(&b).unwrap().contains(&a), "{} does not list {}", b, a);
        }
    }

    #[test]
    fn ring_index_round_trip() {
        for n in 0..8 {
            for i in 0..ring_size(n) {
                let a = from_ring_index(n, i);
                assert_eq!(ring_index(&a), (n, i));
            }
        }
    }

    #[test]
    fn ball_sizes() {
        let sizes: Vec<usize> = (0..4)
            .map(|r| ball(&TileAddress::Center, r).unwrap().len())
            .collect();
        assert_eq!(sizes, vec![1, 8, 29, 85]);
    }

    #[test]
    fn distances() {
        let a = addr("s:2/1.0");
        assert_eq!(graph_distance(&a, &a).unwrap(), 0);
        assert_eq!(graph_distance(&TileAddress::Center, &addr("s:5/")).unwrap(), 1);
        assert_eq!(graph_distance(&TileAddress::Center, &addr("s:0/2.2")).unwrap(), 3);
    }

    #[test]
    fn address_text_form() {
        for s in ["C", "s:0/", "s:0/2.1", "s:6/0.1.0"] {
            assert_eq!(addr(s).to_string(), s);
        }
        assert!("s:7/".parse::<TileAddress>().is_err());
        assert!("s:0/0.2".parse::<TileAddress>().is_err());
        assert!("x".parse::<TileAddress>().is_err());
    }
}
