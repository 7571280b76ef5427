//! Turing computations laid out in a Fibonacci tree.
//!
//! The tree grows from a white root. Its rightmost branch, the frame, holds
//! the tape at time 0: cell `i` at time 0 is the frame node of depth `i`, and
//! cell `i` at time `t + 1` is the leftmost son of cell `i` at time `t`. So
//! cell `(i, t)` sits on level `i + t`, and the cells met left to right on
//! level `d` are `(0, d), (1, d - 1), ..., (d, 0)`. Nodes between two
//! consecutive cells of a level are fillers; they only relay level signals.
//!
//! Channels (all `EdgeColor::Channel`):
//!
//! * son edges carry `h:<slot>:...`, where the slot names the parent colour and
//!   son index. Cells add the column-0 flag, their symbol and a head field:
//!   `-` nothing, `+q` the head is here in state `q`, `>q` start a right move
//!   in state `q` along my level.
//! * level edges carry `l:-`, `l:R:q` or `l:L:q`. A right move of the head at
//!   `(h, t)` goes down to `(h, t + 1)`, right along that level to
//!   `(h + 1, t)`, then down to `(h + 1, t + 1)`. A left move goes from
//!   `(h, t)` left along its level to `(h - 1, t + 1)`. Each stretch of a
//!   level between two cells carries at most one transit.
//! * the root's parent edge is `root` and its right edge `frame`; both face
//!   the host, which uses them to pin the harp. All remaining edges carry the
//!   neutral `o`.
//!
//! No tile holds the head in the halting state, so a region that contains
//! the halting cell cannot be tiled.

mod machine;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::heptagrid::geometry::{realize_geometry, Point};
use crate::heptagrid::{GridError, NodeKind, OrientedTree, Region, TileAddress, TreeNode};
use crate::tiles::{
    solve_region, EdgeColor, KindTag, Patch, Placement, SolveMode, SolveOutcome, TileError, TileSet, TileType,
    VertexMark,
};

pub use machine::{format_trace, tm_run, Configuration, Move, Transition, TuringMachine, BLANK};

#[derive(Debug, thiserror::Error)]
pub enum HarpError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("invalid machine: {0}")]
    InvalidMachine(String),
    #[error("the head leaves the tape on the left at step {step}")]
    LeftEscape { step: usize },
    #[error("no transition for state {state} reading {symbol}")]
    MissingTransition { state: String, symbol: String },
    #[error("cell {cell} at time {time} is outside the region")]
    OutOfRegion { cell: usize, time: usize },
    #[error("tile at {0} carries no cell content")]
    UndecodableCell(TileAddress),
    #[error("no head found at time {0}")]
    NoHead(usize),
    #[error("the machine halts at cell {cell}, time {time}, inside the region")]
    Halted { cell: usize, time: usize },
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Tiles(#[from] TileError),
}

/// Position of a node under its parent: parent colour and son index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Slot {
    Root,
    W0,
    W1,
    W2,
    B0,
    B1,
}

impl Slot {
    pub const SONS: [Slot; 5] = [Slot::W0, Slot::W1, Slot::W2, Slot::B0, Slot::B1];

    pub fn kind(self) -> NodeKind {
        match self {
            Slot::W0 | Slot::B0 => NodeKind::B,
            _ => NodeKind::W,
        }
    }

    pub fn son(parent: NodeKind, i: usize) -> Slot {
        match (parent, i) {
            (NodeKind::W, 0) => Slot::W0,
            (NodeKind::W, 1) => Slot::W1,
            (NodeKind::W, _) => Slot::W2,
            (NodeKind::B, 0) => Slot::B0,
            (NodeKind::B, _) => Slot::B1,
        }
    }

    fn sons(kind: NodeKind) -> &'static [Slot] {
        match kind {
            NodeKind::W => &[Slot::W0, Slot::W1, Slot::W2],
            NodeKind::B => &[Slot::B0, Slot::B1],
        }
    }
}

impl fmt::Display for Slot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Place {
    Cell { cell: usize, time: usize },
    /// Between cells `segment` and `segment + 1` of its level.
    Filler { segment: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HarpNode {
    pub node: TreeNode,
    pub depth: usize,
    pub slot: Slot,
    pub place: Place,
}

/// The first `depth` levels of a Fibonacci tree, possibly clipped.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HarpRegion {
    pub root: TileAddress,
    /// Edge of the root facing its (absent) parent.
    pub up: usize,
    pub depth: usize,
    /// Rightmost branch, root first.
    pub frame: Vec<TileAddress>,
    nodes: BTreeMap<TileAddress, HarpNode>,
    cells: BTreeMap<(usize, usize), TileAddress>,
}

impl HarpRegion {
    pub fn new(root: TileAddress, up: usize, depth: usize) -> Result<HarpRegion, GridError> {
        HarpRegion::clipped(root, up, depth, |_| true)
    }

    /// A sector root of the coordinate system, pointing away from the centre.
    pub fn standard(depth: usize) -> HarpRegion {
        HarpRegion::new(TileAddress::sector_root(0), 0, depth).expect("sector roots are valid")
    }

    /// Keeps the nodes of depth below `depth` whose whole ancestry passes `keep`.
    pub fn clipped(
        root: TileAddress,
        up: usize,
        depth: usize,
        mut keep: impl FnMut(&TileAddress) -> bool,
    ) -> Result<HarpRegion, GridError> {
        let tree = OrientedTree::new(root.clone(), up, NodeKind::W, false);
        let mut nodes = BTreeMap::new();
        let mut cells = BTreeMap::new();
        let mut frame = Vec::new();
        let mut queue = Vec::new();
        if depth > 0 && keep(&root) {
            queue.push(HarpNode { node: tree.root.clone(), depth: 0, slot: Slot::Root, place: Place::Cell { cell: 0, time: 0 } });
        }
        let mut i = 0;
        while i < queue.len() {
            let n = queue[i].clone();
            i += 1;
            if n.depth + 1 < depth {
                for (j, c) in tree.children(&n.node)?.into_iter().enumerate() {
                    if !keep(&c.address) {
                        continue;
                    }
                    let last = j + 1 == n.node.kind.arity() as usize;
                    let place = match n.place {
                        Place::Cell { cell, time } if j == 0 => Place::Cell { cell, time: time + 1 },
                        Place::Cell { cell, time: 0 } if last => Place::Cell { cell: cell + 1, time: 0 },
                        Place::Cell { cell, .. } => Place::Filler { segment: cell },
                        f => f,
                    };
                    let slot = Slot::son(n.node.kind, j);
                    queue.push(HarpNode { node: c, depth: n.depth + 1, slot, place });
                }
            }
            if let Place::Cell { cell, time } = n.place {
                cells.insert((cell, time), n.node.address.clone());
                if time == 0 {
                    frame.push(n.node.address.clone());
                }
            }
            let a = n.node.address.clone();
            let dup = nodes.insert(a.clone(), n);
            debug_assert!(dup.is_none(), "tree revisits {}", a);
        }
        Ok(HarpRegion { root, up: up % 7, depth, frame, nodes, cells })
    }

    pub fn nodes(&self) -> impl Iterator<Item = &HarpNode> {
        self.nodes.values()
    }

    pub fn node(&self, a: &TileAddress) -> Option<&HarpNode> {
        self.nodes.get(a)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn contains(&self, a: &TileAddress) -> bool {
        self.nodes.contains_key(a)
    }

    pub fn to_region(&self) -> Region {
        Region::Explicit(self.nodes.keys().cloned().collect())
    }



    /// The (cell, time) to address map.
    pub fn spacetime(&self) -> &BTreeMap<(usize, usize), TileAddress> {
        &self.cells
    }

    /// Time steps whose configuration is fully visible: at time `t` the head
    /// and every written cell lie in cells `0..=t`.
    pub fn capacity(&self) -> usize {
        let mut t = 0;
        while (0..=t + 1).all(|i| self.cells.contains_key(&(i, t + 1))) {
            t += 1;
        }
        t
    }

    /// Two rays through the mid-points of the outer edges of the leftmost
    /// branch and of the frame, from the root to the deepest present node.
    pub fn sector_bounds(&self) -> Result<[(Point, Point); 2], GridError> {
        let mut left = vec![self.root.clone()];
        while let Some(a) = self.cells.get(&(0, left.len())) {
            left.push(a.clone());
        }
        let tips = [(left.first().unwrap().clone(), left.last().unwrap().clone()), (self.root.clone(), self.frame.last().unwrap_or(&self.root).clone())];
        let all: BTreeSet<TileAddress> = tips.iter().flat_map(|(a, b)| [a.clone(), b.clone()]).collect();
        let geo = realize_geometry(&Region::Explicit(all))?;
        let mid = |a: &TileAddress, off: usize| {
            let up = self.nodes[a].node.up;
            let (p, q) = geo[a].edge((up + off) % 7);
            Point::new((p.x + q.x) / 2.0, (p.y + q.y) / 2.0)
        };
        let lk = |a: &TileAddress| if self.nodes[a].node.kind == NodeKind::W { 1 } else { 2 };
        Ok([
            (mid(&tips[0].0, lk(&tips[0].0)), mid(&tips[0].1, lk(&tips[0].1))),
            (mid(&tips[1].0, 6), mid(&tips[1].1, 6)),
        ])
    }
}

pub fn map_spacetime(region: &HarpRegion, cell: usize, time: usize) -> Result<TileAddress, HarpError> {
    region.cells.get(&(cell, time)).cloned().ok_or(HarpError::OutOfRegion { cell, time })
}

/// Traffic on a stretch of level between two cells.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Signal {
    Quiet,
    Right(String),
    Left(String),
}

impl Signal {
    fn channel(&self) -> String {
        match self {
            Signal::Quiet => "l:-".into(),
            Signal::Right(q) => format!("l:R:{}", q),
            Signal::Left(q) => format!("l:L:{}", q),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CellHead {
    /// No head. `emit`: a right move leaves along my level in that state.
    /// `arrival`: a right move reaches me from the left; my son gets the head.
    Idle { emit: Option<String>, arrival: Option<String> },
    Here { state: String, from_right: bool },
}

/// What a harp tile stands for.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TileRole {
    /// Cell 0 at time 0, head in the initial state.
    Root,
    /// Frame cell of depth at least 1.
    Frame { arrival: Option<String> },
    Cell { slot: Slot, col0: bool, symbol: String, head: CellHead },
    Filler { slot: Slot, signal: Signal },
}

impl TileRole {
    pub fn id(&self) -> String {
        let opt = |p: &str, q: &Option<String>| q.as_ref().map(|q| format!(".{}{}", p, q)).unwrap_or_default();
        match self {
            TileRole::Root => "h.root".into(),
            TileRole::Frame { arrival } => format!("h.frame{}", opt("R", arrival)),
            TileRole::Cell { slot, col0, symbol, head } => {
                let h = match head {
                    CellHead::Idle { emit, arrival } => format!("idle{}{}", opt(">", emit), opt("<", arrival)),
                    CellHead::Here { state, from_right } => {
                        format!("at.{}.{}", state, if *from_right { "right" } else { "up" })
                    }
                };
                format!("h.{}.c{}.{}.{}", slot, u8::from(*col0), symbol, h)
            }
            TileRole::Filler { slot, signal } => {
                let s = match signal {
                    Signal::Quiet => "-".to_string(),
                    Signal::Right(q) => format!("R{}", q),
                    Signal::Left(q) => format!("L{}", q),
                };
                format!("h.{}.fill.{}", slot, s)
            }
        }
    }

    /// The role with states and symbols erased.
    pub fn shape(&self) -> String {
        match self {
            TileRole::Root => self.id(),
            TileRole::Frame { arrival } => format!("frame{}", if arrival.is_some() { "+arrival" } else { "" }),
            TileRole::Cell { slot, col0, head, .. } => {
                let h = match head {
                    CellHead::Idle { emit: None, arrival: None } => "idle",
                    CellHead::Idle { emit: Some(_), .. } => "emit",
                    CellHead::Idle { .. } => "arrival",
                    CellHead::Here { from_right: false, .. } => "head-from-parent",
                    CellHead::Here { from_right: true, .. } => "head-from-right",
                };
                format!("cell.{}.c{}.{}", slot, u8::from(*col0), h)
            }
            TileRole::Filler { slot, signal } => {
                let s = match signal {
                    Signal::Quiet => "quiet",
                    Signal::Right(_) => "right",
                    Signal::Left(_) => "left",
                };
                format!("fill.{}.{}", slot, s)
            }
        }
    }
}

/// Every role shape the encoding can emit, whatever the machine.
pub fn structural_core() -> BTreeSet<String> {
    let q = || Some("q".to_string());
    let mut roles = vec![TileRole::Root, TileRole::Frame { arrival: None }, TileRole::Frame { arrival: q() }];
    for slot in [Slot::W0, Slot::B0] {
        for col0 in [false, true] {
            let mut heads = vec![
                CellHead::Idle { emit: None, arrival: None },
                CellHead::Idle { emit: q(), arrival: None },
                CellHead::Here { state: "q".into(), from_right: false },
                CellHead::Here { state: "q".into(), from_right: true },
            ];
            if !col0 {
                heads.push(CellHead::Idle { emit: None, arrival: q() });
            }
            for head in heads {
                roles.push(TileRole::Cell { slot, col0, symbol: BLANK.into(), head });
            }
        }
    }
    for slot in Slot::SONS {
        for signal in [Signal::Quiet, Signal::Right("q".into()), Signal::Left("q".into())] {
            roles.push(TileRole::Filler { slot, signal });
        }
    }
    roles.iter().map(TileRole::shape).collect()
}

fn down(slot: Slot, col0: bool, symbol: &str, head: &str) -> String {
    format!("h:{}:c:{}:{}:{}", slot, u8::from(col0), symbol, head)
}

fn filler_sons(kind: NodeKind) -> Vec<String> {
    Slot::sons(kind).iter().map(|s| format!("h:{}:n", s)).collect()
}

/// Channels of a role as (parent, left, right, sons), or `None` when the
/// role has no tile: the head in the halting state, or moving off the tape.
fn role_channels(m: &TuringMachine, role: &TileRole) -> Option<(String, String, String, Vec<String>)> {
    const O: &str = "o";
    match role {
        TileRole::Root => {
            if m.is_halting(&m.initial) {
                return None;
            }
            let t = m.step(&m.initial, BLANK)?;
            if t.mv == Move::L {
                return None;
            }
            let sons = vec![down(Slot::W0, true, &t.symbol, &format!(">{}", t.state)), "h:W1:n".into(), "h:W2:f".into()];
            Some(("root".into(), O.into(), "frame".into(), sons))
        }
        TileRole::Frame { arrival } => {
            let left = match arrival {
                Some(q) => Signal::Right(q.clone()).channel(),
                None => Signal::Quiet.channel(),
            };
            let head = arrival.as_ref().map(|q| format!("+{}", q)).unwrap_or("-".into());
            let sons = vec![down(Slot::W0, false, BLANK, &head), "h:W1:n".into(), "h:W2:f".into()];
            Some(("h:W2:f".into(), left, O.into(), sons))
        }
        TileRole::Cell { slot, col0, symbol, head } => {
            let edge_left = |s: Signal| if *col0 { O.to_string() } else { s.channel() };
            let (parent_head, left, right, son_symbol, son_head) = match head {
                CellHead::Idle { emit, arrival } => {
                    if emit.is_some() && arrival.is_some() || *col0 && arrival.is_some() {
                        return None;
                    }
                    let right = emit.clone().map(Signal::Right).unwrap_or(Signal::Quiet).channel();
                    let left = edge_left(arrival.clone().map(Signal::Right).unwrap_or(Signal::Quiet));
                    let ph = emit.as_ref().map(|q| format!(">{}", q)).unwrap_or("-".into());
                    let sh = arrival.as_ref().map(|q| format!("+{}", q)).unwrap_or("-".into());
                    (ph, left, right, symbol.clone(), sh)
                }
                CellHead::Here { state, from_right } => {
                    if m.is_halting(state) {
                        return None;
                    }
                    let t = m.step(state, symbol)?;
                    let ph = if *from_right { "-".to_string() } else { format!("+{}", state) };
                    let right = if *from_right { Signal::Left(state.clone()) } else { Signal::Quiet }.channel();
                    match t.mv {
                        Move::R => (ph, edge_left(Signal::Quiet), right, t.symbol.clone(), format!(">{}", t.state)),
                        Move::L if *col0 => return None,
                        Move::L => (ph, Signal::Left(t.state.clone()).channel(), right, t.symbol.clone(), "-".into()),
                    }
                }
            };
            let sons = vec![down(Slot::B0, *col0, &son_symbol, &son_head), "h:B1:n".into()];
            Some((down(*slot, *col0, symbol, &parent_head), left, right, sons))
        }
        TileRole::Filler { slot, signal } => {
            let l = signal.channel();
            Some((format!("h:{}:n", slot), l.clone(), l, filler_sons(slot.kind())))
        }
    }
}

/// The tile of a role, edges listed from the parent edge; `None` as in
/// [`role_channels`].
pub fn role_tile(m: &TuringMachine, role: &TileRole) -> Option<TileType> {
    let (p, l, r, sons) = role_channels(m, role)?;
    let kind = match role {
        TileRole::Root => NodeKind::W,
        TileRole::Frame { .. } => NodeKind::W,
        TileRole::Cell { slot, .. } | TileRole::Filler { slot, .. } => slot.kind(),
    };
    let o = "o".to_string();
    let edges = match kind {
        NodeKind::W => [p, l, sons[0].clone(), sons[1].clone(), sons[2].clone(), o, r],
        NodeKind::B => [p, o.clone(), l, sons[0].clone(), sons[1].clone(), o, r],
    };
    let tag = match role {
        TileRole::Root | TileRole::Frame { .. } | TileRole::Cell { col0: true, .. } => KindTag::Border,
        _ => KindTag::Computation,
    };
    Some(TileType { id: role.id(), kind: tag, edges: edges.map(EdgeColor::Channel), vertices: [VertexMark::Plain; 7] })
}

/// The compiled overlay of one machine.
#[derive(Debug, Clone)]
pub struct HarpTiles {
    pub tileset: TileSet,
    pub roles: BTreeMap<String, TileRole>,
}

impl HarpTiles {
    /// Role of a placed tile; combined ids `host+harp` resolve to their harp part.
    pub fn role_of(&self, type_id: &str) -> Option<&TileRole> {
        let id = type_id.rsplit('+').next().unwrap_or(type_id);
        self.roles.get(id)
    }
}

/// Tile count of [`compile_tm`], from the shape of the encoding.
pub fn tile_count_formula(m: &TuringMachine) -> usize {
    let s = m.alphabet.len();
    let q = m.states.len();
    let w = m.working_states().count();
    let right_moves = m.delta.values().filter(|t| t.mv == Move::R).count();
    let root = usize::from(role_tile(m, &TileRole::Root).is_some());
    let frame = 1 + q;
    let inner = s * (1 + 2 * q) + 2 * w * s;
    let col0 = s * (1 + q) + 2 * right_moves;
    let fillers = 5 * (1 + 2 * q);
    root + frame + 2 * (inner + col0) + fillers
}

pub fn compile_tm(m: &TuringMachine) -> Result<HarpTiles, HarpError> {
    m.validate()?;
    let states = || std::iter::once(None).chain(m.states.iter().cloned().map(Some));
    let mut roles = vec![TileRole::Root];
    roles.extend(states().map(|arrival| TileRole::Frame { arrival }));
    for slot in [Slot::W0, Slot::B0] {
        for col0 in [false, true] {
            for a in &m.alphabet {
                let mut heads = Vec::new();
                for emit in states() {
                    for arrival in states() {
                        heads.push(CellHead::Idle { emit: emit.clone(), arrival });
                    }
                }
                for q in &m.states {
                    for from_right in [false, true] {
                        heads.push(CellHead::Here { state: q.clone(), from_right });
                    }
                }
                roles.extend(heads.into_iter().map(|head| TileRole::Cell { slot, col0, symbol: a.clone(), head }));
            }
        }
    }
    for slot in Slot::SONS {
        roles.push(TileRole::Filler { slot, signal: Signal::Quiet });
        for q in &m.states {
            roles.push(TileRole::Filler { slot, signal: Signal::Right(q.clone()) });
            roles.push(TileRole::Filler { slot, signal: Signal::Left(q.clone()) });
        }
    }
    let mut types = Vec::new();
    let mut by_id = BTreeMap::new();
    for r in roles {
        if let Some(t) = role_tile(m, &r) {
            by_id.insert(t.id.clone(), r);
            types.push(t);
        }
    }
    let tileset = TileSet::new("harp", types, Vec::new())?;
    Ok(HarpTiles { tileset, roles: by_id })
}

/// The run of `m` seen as head positions and moves over time.
struct Run {
    trace: Vec<Configuration>,
    moves: Vec<Move>,
}

impl Run {
    fn new(m: &TuringMachine, steps: usize) -> Result<Run, HarpError> {
        let trace = tm_run(m, steps)?;
        let moves = trace
            .windows(2)
            .map(|w| if w[1].head > w[0].head { Move::R } else { Move::L })
            .collect();
        Ok(Run { trace, moves })
    }

    fn head(&self, t: usize) -> Option<(usize, &str)> {
        self.trace.get(t).map(|c| (c.head, c.state.as_str()))
    }

    /// Head position, move and new state of the step leaving time `t`.
    fn step(&self, t: usize) -> Option<(usize, Move, &str)> {
        let mv = *self.moves.get(t)?;
        Some((self.trace[t].head, mv, self.trace[t + 1].state.as_str()))
    }

    fn symbol(&self, t: usize, i: usize) -> &str {
        self.trace[t.min(self.trace.len() - 1)].symbol(i)
    }

    fn signal(&self, segment: usize, level: usize) -> Signal {
        let t = level - segment - 1;
        match self.step(t) {
            Some((h, Move::R, q)) if h == segment => Signal::Right(q.into()),
            Some((h, Move::L, q)) if h == segment + 1 => Signal::Left(q.into()),
            _ => Signal::Quiet,
        }
    }

    fn role(&self, n: &HarpNode) -> TileRole {
        match n.place {
            Place::Filler { segment } => TileRole::Filler { slot: n.slot, signal: self.signal(segment, n.depth) },
            Place::Cell { cell: 0, time: 0 } => TileRole::Root,
            Place::Cell { cell, time: 0 } => TileRole::Frame {
                arrival: match self.signal(cell - 1, cell) {
                    Signal::Right(q) => Some(q),
                    _ => None,
                },
            },
            Place::Cell { cell, time } => {
                let head = match self.head(time) {
                    Some((h, q)) if h == cell => {
                        CellHead::Here { state: q.into(), from_right: self.moves[time - 1] == Move::L }
                    }
                    _ => {
                        let emit = match self.step(time - 1) {
                            Some((h, Move::R, q)) if h == cell => Some(q.to_string()),
                            _ => None,
                        };
                        let arrival = match self.step(time) {
                            Some((h, Move::R, q)) if h + 1 == cell => Some(q.to_string()),
                            _ => None,
                        };
                        CellHead::Idle { emit, arrival }
                    }
                };
                TileRole::Cell { slot: n.slot, col0: cell == 0, symbol: self.symbol(time, cell).into(), head }
            }
        }
    }
}

/// Role of every node of `region` under the run of `m`.
pub fn harp_roles(m: &TuringMachine, region: &HarpRegion) -> Result<BTreeMap<TileAddress, TileRole>, HarpError> {
    let run = Run::new(m, region.depth)?;
    let mut out = BTreeMap::new();
    for n in region.nodes() {
        let role = run.role(n);
        if role_tile(m, &role).is_none() {
            let Place::Cell { cell, time } = n.place else {
                unreachable!("fillers always have a tile")
            };
            return Err(HarpError::Halted { cell, time });
        }
        out.insert(n.node.address.clone(), role);
    }
    Ok(out)
}

/// The tiling of `region` by the overlay of `m`, built directly from the run.
pub fn harp_patch(m: &TuringMachine, region: &HarpRegion) -> Result<Patch, HarpError> {
    let mut p = Patch::new();
    for (a, role) in harp_roles(m, region)? {
        p.insert(Placement::new(a.clone(), role.id(), region.nodes[&a].node.up as u8));
    }
    Ok(p)
}

/// The root tile, fixed at the root: the machine starts there.
pub fn root_patch(m: &TuringMachine, region: &HarpRegion) -> Result<Patch, HarpError> {
    if role_tile(m, &TileRole::Root).is_none() {
        tm_run(m, 1)?;
        return Err(HarpError::Halted { cell: 0, time: 0 });
    }
    let mut p = Patch::new();
    p.insert(Placement::new(region.root.clone(), TileRole::Root.id(), region.up as u8));
    Ok(p)
}

/// Searches the harp region under the compiled overlay, with the root fixed.
pub fn solve_harp(
    m: &TuringMachine,
    tiles: &HarpTiles,
    region: &HarpRegion,
    budget: u64,
) -> Result<SolveOutcome, HarpError> {
    Ok(solve_region(&tiles.tileset, &region.to_region(), &root_patch(m, region)?, budget, SolveMode::First)?)
}

/// Reads the configurations at times `0..=capacity` back from a tiling.
pub fn extract_trace(p: &Patch, region: &HarpRegion, m: &TuringMachine) -> Result<Vec<Configuration>, HarpError> {
    let tiles = compile_tm(m)?;
    let mut out = Vec::new();
    for t in 0..=region.capacity() {
        let mut c = Configuration { tape: BTreeMap::new(), head: usize::MAX, state: String::new() };
        let mut i = 0;
        while let Some(a) = region.cells.get(&(i, t)) {
            let role = p.get(a).and_then(|pl| tiles.role_of(&pl.type_id));
            let (symbol, state) = match role {
                Some(TileRole::Root) => (BLANK.to_string(), Some(m.initial.clone())),
                Some(TileRole::Frame { .. }) => (BLANK.to_string(), None),
                Some(TileRole::Cell { symbol, head, .. }) => match head {
                    CellHead::Here { state, .. } => (symbol.clone(), Some(state.clone())),
                    CellHead::Idle { .. } => (symbol.clone(), None),
                },
                _ => return Err(HarpError::UndecodableCell(a.clone())),
            };
            c.write(i, &symbol);
            if let Some(q) = state {
                c.head = i;
                c.state = q;
            }
            i += 1;
        }
        if c.head == usize::MAX {
            return Err(HarpError::NoHead(t));
        }
        let halted = m.is_halting(&c.state);
        out.push(c);
        if halted {
            break;
        }
    }
    Ok(out)
}

/// Where the run of `m` halts, as (cell, time), within `steps` steps.
pub fn halting_cell(m: &TuringMachine, steps: usize) -> Result<Option<(usize, usize)>, HarpError> {
    let trace = tm_run(m, steps)?;
    let last = trace.last().expect("runs are never empty");
    Ok(m.is_halting(&last.state).then(|| (last.head, trace.len() - 1)))
}

/// The machines shipped in `data/machines`, by file stem.
pub fn shipped_machines() -> Vec<(&'static str, TuringMachine)> {
    [
        ("writer", include_str!("../data/machines/writer.tm")),
        ("zigzag", include_str!("../data/machines/zigzag.tm")),
        ("counter", include_str!("../data/machines/counter.tm")),
        ("halting3", include_str!("../data/machines/halting3.tm")),
        ("halting4", include_str!("../data/machines/halting4.tm")),
    ]
    .into_iter()
    .map(|(n, t)| (n, t.parse().expect("shipped machines are valid")))
    .collect()
}
