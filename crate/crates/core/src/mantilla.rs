//! The mantilla: a 21-tile skeleton of centres and petals, its flower
//! decomposition, sector grammar and randomized growth.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::heptagrid::GridError;
use crate::tiles::{format, EdgeColor, KindTag, TileError, TileSet, TileType, VertexMark};

pub mod flowers;
pub mod grammar;
pub mod grow;

pub use flowers::{flowers_of, Flower, FlowerTree, View};
pub use grammar::{search_grammars, shipped_grammar, split_sector, GrammarCandidate, SectorGrammar, SectorKind, Templates};
pub use grow::{grow, grow_logged, grow_states, Draw, GrowthLog, GrowthState, ParentalChoices};

pub const TABLE: &str = include_str!("../data/mantilla.table");
pub const TILES: &str = include_str!("../data/mantilla.tiles");
pub const GRAMMAR: &str = include_str!("../data/mantilla.grammar");
pub const PARENTAL: &str = include_str!("../data/parental.choices");

const OVERLINE: char = '\u{0305}';
const RED: char = '\u{25E6}';

#[derive(Debug, Error)]
pub enum MantillaError {
    #[error("flower with one red junction pair needs a gap")]
    MissingGap,
    #[error("bad gap {0}")]
    BadGap(u8),
    #[error("red count {0} out of range")]
    BadRedCount(u8),
    #[error("unknown sector kind {0:?}")]
    UnknownKind(String),
    #[error("malformed table line {line}: {msg}")]
    Table { line: usize, msg: String },
    #[error("bad petal code {0:?}")]
    BadCode(String),
    #[error("not a mantilla: {0}")]
    NotAMantilla(String),
    #[error("growth stuck at step {step}: {msg}")]
    StuckGrowth { step: usize, msg: String },
    #[error("grammar line {line}: {msg}")]
    Grammar { line: usize, msg: String },
    #[error(transparent)]
    Tiles(#[from] TileError),
    #[error(transparent)]
    Grid(#[from] GridError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FlowerKind {
    F,
    Gl,
    Gr,
    Eight,
    Seven,
    Ten,
}

impl FlowerKind {
    pub fn name(self) -> &'static str {
        match self {
            FlowerKind::F => "F",
            FlowerKind::Gl => "Gl",
            FlowerKind::Gr => "Gr",
            FlowerKind::Eight => "8",
            FlowerKind::Seven => "7",
            FlowerKind::Ten => "10",
        }
    }

    pub fn is_g(self) -> bool {
        matches!(self, FlowerKind::Gl | FlowerKind::Gr)
    }

    pub fn tile_id(self) -> Option<&'static str> {
        match self {
            FlowerKind::F | FlowerKind::Gl | FlowerKind::Gr | FlowerKind::Eight => Some(self.name()),
            _ => None,
        }
    }

    pub fn from_tag(tag: KindTag) -> Option<FlowerKind> {
        match tag {
            KindTag::CentreF => Some(FlowerKind::F),
            KindTag::CentreGl => Some(FlowerKind::Gl),
            KindTag::CentreGr => Some(FlowerKind::Gr),
            KindTag::Centre8 => Some(FlowerKind::Eight),
            _ => None,
        }
    }

    pub const CENTRES: [FlowerKind; 4] =
        [FlowerKind::F, FlowerKind::Gl, FlowerKind::Gr, FlowerKind::Eight];
}

impl fmt::Display for FlowerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Flower kind from the number of red vertices at distance one from the
/// centre and, when exactly one is present, the smaller petal gap.
///
/// A G result is reported as `Gl`; the side is not a local property and is
/// refined by the caller.
pub fn classify_flower(red_at_distance1: u8, red_gap: Option<u8>) -> Result<FlowerKind, MantillaError> {
    match (red_at_distance1, red_gap) {
        (1, None) => Err(MantillaError::MissingGap),
        (1, Some(2)) => Ok(FlowerKind::F),
        (1, Some(3)) => Ok(FlowerKind::Gl),
        (1, Some(g)) => Err(MantillaError::BadGap(g)),
        (_, Some(g)) if red_at_distance1 <= 3 => Err(MantillaError::BadGap(g)),
        (3, None) => Ok(FlowerKind::Seven),
        (2, None) => Ok(FlowerKind::Eight),
        (0, None) => Ok(FlowerKind::Ten),
        (r, _) => Err(MantillaError::BadRedCount(r)),
    }
}

/// One contact of a petal code: the centre colour and whether the red
/// vertex follows it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Contact {
    pub color: EdgeColor,
    pub red_after: bool,
}

/// Parses a petal code in either notation: `1◦13̅` or `1o13~`.
pub fn parse_code(code: &str) -> Result<Vec<Contact>, MantillaError> {
    let bad = || MantillaError::BadCode(code.to_string());
    let mut out: Vec<Contact> = Vec::new();
    let mut red_front = false;
    for c in code.chars() {
        match c {
            OVERLINE | '~' => match out.last_mut() {
                Some(Contact { color: EdgeColor::Numbered { overlined, .. }, .. }) if !*overlined => {
                    *overlined = true
                }
                _ => return Err(bad()),
            },
            RED | 'o' => match out.last_mut() {
                Some(last) => last.red_after = true,
                None => red_front = true,
            },
            d => {
                let v = d.to_digit(10).filter(|v| (1..=7).contains(v)).ok_or_else(bad)?;
                out.push(Contact { color: EdgeColor::num(v as u8), red_after: false });
            }
        }
    }
    if red_front {
        out.last_mut().ok_or_else(bad)?.red_after = true;
    }
    if out.len() != 3 || out.iter().filter(|c| c.red_after).count() != 1 {
        return Err(bad());
    }
    Ok(out)
}

/// ASCII tile id of a printed code.
pub fn code_id(code: &str) -> String {
    code.chars()
        .map(|c| match c {
            OVERLINE => '~',
            RED => 'o',
            c => c,
        })
        .collect()
}

/// Printed form of an ASCII tile id.
pub fn id_code(id: &str) -> String {
    id.chars()
        .map(|c| match c {
            '~' => OVERLINE,
            'o' => RED,
            c => c,
        })
        .collect()
}

/// Petal tile for a three-contact code. Contacts are laid out clockwise
/// (decreasing edge index) from edge 0; the gap holding the red vertex has
/// two free edges with the red vertex between them, the other gaps one.
pub fn petal_tile(code: &str) -> Result<TileType, MantillaError> {
    let cs = parse_code(code)?;
    let mut edges: [EdgeColor; 7] = std::array::from_fn(|_| EdgeColor::Petal(0));
    let mut vertices = [VertexMark::Plain; 7];
    let mut pos = 0i32;
    for c in &cs {
        edges[pos.rem_euclid(7) as usize] = c.color.clone();
        let gap = if c.red_after { 2 } else { 1 };
        if c.red_after {
            vertices[(pos - 2).rem_euclid(7) as usize] = VertexMark::Red;
        }
        pos -= gap + 1;
    }
    Ok(TileType { id: code_id(code), kind: KindTag::Petal, edges, vertices })
}

/// Centre tile: numbers run clockwise from edge 0, number k carrying the
/// label of column k. G centres exchange labels 1 and 7.
pub fn centre_tile(kind: FlowerKind, row: &[EdgeColor; 5]) -> TileType {
    let (first, last) = if kind.is_g() { (7, 1) } else { (1, 7) };
    let mut labels = vec![EdgeColor::num(first)];
    labels.extend(row.iter().cloned());
    labels.push(EdgeColor::num(last));
    let mut edges: [EdgeColor; 7] = std::array::from_fn(|_| EdgeColor::Petal(0));
    for (k, l) in labels.into_iter().enumerate() {
        edges[(7 - k) % 7] = l;
    }
    let tag = match kind {
        FlowerKind::F => KindTag::CentreF,
        FlowerKind::Gl => KindTag::CentreGl,
        FlowerKind::Gr => KindTag::CentreGr,
        _ => KindTag::Centre8,
    };
    TileType { id: kind.name().to_string(), kind: tag, edges, vertices: [VertexMark::Plain; 7] }
}

/// Edge index of centre number `k` (1..=7).
pub fn centre_edge(k: usize) -> usize {
    (8 - k) % 7
}

/// Parsed contents of the table data file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Table {
    pub centres: Vec<(FlowerKind, [String; 5])>,
    /// (parent kind, centre colour, printed code)
    pub petals: Vec<(FlowerKind, String, String)>,
    pub errata: Vec<(FlowerKind, String, String)>,
}

fn kind_named(s: &str) -> Option<FlowerKind> {
    FlowerKind::CENTRES.into_iter().find(|k| k.name() == s)
}

pub fn parse_color(s: &str) -> Option<EdgeColor> {
    let mut it = s.chars();
    let v = it.next()?.to_digit(10)? as u8;
    match (it.next(), it.next()) {
        (None, _) => Some(EdgeColor::num(v)),
        (Some(OVERLINE), None) => Some(EdgeColor::bar(v)),
        _ => None,
    }
}

impl Table {
    pub fn parse(text: &str) -> Result<Table, MantillaError> {
        let mut t = Table { centres: vec![], petals: vec![], errata: vec![] };
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |msg: &str| MantillaError::Table { line: i + 1, msg: msg.to_string() };
            let f: Vec<&str> = line.split_whitespace().collect();
            let kind = f.get(1).and_then(|k| kind_named(k)).ok_or_else(|| err("bad kind"))?;
            match (f[0], f.len()) {
                ("centre", 7) => {
                    let row: [String; 5] = std::array::from_fn(|j| f[2 + j].to_string());
                    if row.iter().any(|c| parse_color(c).is_none()) {
                        return Err(err("bad colour"));
                    }
                    t.centres.push((kind, row));
                }
                ("petal", 4) => t.petals.push((kind, f[2].to_string(), f[3].to_string())),
                ("erratum", 4) => t.errata.push((kind, f[2].to_string(), f[3].to_string())),
                _ => return Err(err("unrecognised line")),
            }
        }
        Ok(t)
    }

    /// Codes actually used: printed codes with errata applied, in table order.
    pub fn effective_petals(&self) -> Vec<(FlowerKind, String, String)> {
        self.petals
            .iter()
            .map(|(k, col, code)| {
                let fixed = self
                    .errata
                    .iter()
                    .find(|(ek, ecol, _)| ek == k && ecol == col)
                    .map(|e| e.2.clone());
                (*k, col.clone(), fixed.unwrap_or_else(|| code.clone()))
            })
            .collect()
    }

    pub fn tileset(&self) -> Result<TileSet, MantillaError> {
        let mut types = Vec::new();
        for (kind, row) in &self.centres {
            let cols: Vec<EdgeColor> = row.iter().filter_map(|c| parse_color(c)).collect();
            let cols: [EdgeColor; 5] = cols.try_into().expect("validated on parse");
            types.push(centre_tile(*kind, &cols));
        }
        let mut seen = std::collections::BTreeSet::new();
        for (_, _, code) in self.effective_petals() {
            if seen.insert(code.clone()) {
                types.push(petal_tile(&code)?);
            }
        }
        let skeleton = types.iter().map(|t| t.id.clone()).collect();
        Ok(TileSet::new("mantilla", types, skeleton)?)
    }

    /// Owner kinds of each petal id, with the centre colour it faces.
    pub fn owners(&self) -> BTreeMap<String, Vec<(FlowerKind, EdgeColor)>> {
        let mut m: BTreeMap<String, Vec<(FlowerKind, EdgeColor)>> = BTreeMap::new();
        for (k, col, code) in self.effective_petals() {
            m.entry(code_id(&code))
                .or_default()
                .push((k, parse_color(&col).expect("validated colour")));
        }
        m
    }
}

/// The shipped tile set, read from the bundled tile file.
pub fn mantilla_tileset() -> TileSet {
    format::parse_tileset(TILES).expect("bundled tile file parses")
}

pub fn mantilla_table() -> Table {
    Table::parse(TABLE).expect("bundled table parses")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classify_examples() {
        assert_eq!(classify_flower(3, None).unwrap(), FlowerKind::Seven);
        assert_eq!(classify_flower(0, None).unwrap(), FlowerKind::Ten);
        assert_eq!(classify_flower(2, None).unwrap(), FlowerKind::Eight);
        assert_eq!(classify_flower(1, Some(2)).unwrap(), FlowerKind::F);
        assert_eq!(classify_flower(1, Some(3)).unwrap(), FlowerKind::Gl);
        assert!(matches!(classify_flower(1, None), Err(MantillaError::MissingGap)));
        assert!(matches!(classify_flower(1, Some(4)), Err(MantillaError::BadGap(4))));
        assert!(matches!(classify_flower(2, Some(2)), Err(MantillaError::BadGap(2))));
        assert!(matches!(classify_flower(4, None), Err(MantillaError::BadRedCount(4))));
    }

    #[test]
    fn codes_parse_in_both_notations() {
        let a = parse_code("1◦13\u{305}").unwrap();
        let b = parse_code("1o13~").unwrap();
        assert_eq!(a, b);
        assert_eq!(a[2].color, EdgeColor::bar(3));
        assert!(a[0].red_after);
        let lead = parse_code("◦77").unwrap_err();
        assert!(matches!(lead, MantillaError::BadCode(_)));
        assert!(parse_code("5o77").is_ok());
        assert!(parse_code("12").is_err());
        assert!(parse_code("1~~23o").is_err());
        assert_eq!(id_code(&code_id("6\u{305}6\u{305}7◦")), "6\u{305}6\u{305}7◦");
    }

    #[test]
    fn petal_layout() {
        let t = petal_tile("2o77").unwrap();
        assert_eq!(t.edges[0], EdgeColor::num(2));
        assert_eq!(t.edges[4], EdgeColor::num(7));
        assert_eq!(t.edges[2], EdgeColor::num(7));
        assert_eq!(t.vertices[5], VertexMark::Red);
        assert_eq!(t.vertices.iter().filter(|&&v| v == VertexMark::Red).count(), 1);
        assert_eq!(t.edges.iter().filter(|e| matches!(e, EdgeColor::Petal(_))).count(), 4);
    }

    #[test]
    fn centre_numbering() {
        let ts = mantilla_tileset();
        let f = ts.get("F").unwrap();
        let want = [EdgeColor::num(2), EdgeColor::bar(3), EdgeColor::bar(4), EdgeColor::bar(5), EdgeColor::num(6)];
        for (i, c) in want.iter().enumerate() {
            assert_eq!(&f.edges[centre_edge(i + 2)], c);
        }
        assert_eq!(f.edges[centre_edge(1)], EdgeColor::num(1));
        let g = ts.get("Gl").unwrap();
        assert_eq!(g.edges[centre_edge(1)], EdgeColor::num(7));
        assert_eq!(g.edges[centre_edge(7)], EdgeColor::num(1));
        assert_eq!(g.edges[centre_edge(2)], EdgeColor::bar(6));
    }

    #[test]
    fn tile_file_is_generated_from_table() {
        let from_table = mantilla_table().tileset().unwrap();
        assert_eq!(format::write_tileset(&from_table), TILES);
        let ts = mantilla_tileset();
        assert_eq!(ts.types.len(), 21);
        assert_eq!(ts.types.iter().filter(|t| t.kind == KindTag::Petal).count(), 17);
        assert_eq!(ts.skeleton.len(), 21);
    }

    #[test]
    fn table_audit() {
        let o = OVERLINE;
        let bar = |d: char| format!("{}{}", d, o);
        let t = mantilla_table();
        let rows: Vec<(FlowerKind, Vec<String>)> =
            t.centres.iter().map(|(k, r)| (*k, r.to_vec())).collect();
        let want_rows = [
            (FlowerKind::F, vec!["2".to_string(), bar('3'), bar('4'), bar('5'), "6".into()]),
            (FlowerKind::Gl, vec![bar('6'), bar('5'), "4".into(), "3".into(), "2".into()]),
            (FlowerKind::Gr, vec!["6".into(), "5".into(), "4".into(), bar('3'), bar('2')]),
            (FlowerKind::Eight, vec![bar('2'), "3".into(), bar('4'), "5".into(), bar('6')]),
        ];
        assert_eq!(rows, want_rows);
        let r = RED;
        let cells = [
            (FlowerKind::F, "2".to_string(), format!("2{r}77")),
            (FlowerKind::F, bar('3'), format!("1{r}{}", bar('3'))),
            (FlowerKind::F, bar('4'), format!("{}{}7{r}", bar('1'), bar('4'))),
            (FlowerKind::F, bar('5'), format!("{}7{r}7", bar('5'))),
            (FlowerKind::F, "6".into(), format!("11{r}6")),
            (FlowerKind::Gl, "2".into(), format!("11{r}2")),
            (FlowerKind::Gl, "3".into(), format!("37{r}7")),
            (FlowerKind::Gl, "4".into(), format!("1{r}14")),
            (FlowerKind::Gl, bar('5'), format!("{}{r}77", bar('5'))),
            (FlowerKind::Gl, bar('6'), format!("{}{}7{r}", bar('6'), bar('6'))),
            (FlowerKind::Gr, bar('2'), format!("1{}{}{r}", bar('2'), bar('2'))),
            (FlowerKind::Gr, bar('3'), format!("11{r}{}", bar('3'))),
            (FlowerKind::Gr, "4".into(), format!("47{r}7")),
            (FlowerKind::Gr, "5".into(), format!("1{r}15")),
            (FlowerKind::Gr, "6".into(), format!("6{r}77")),
            (FlowerKind::Eight, bar('2'), format!("1{}{}{r}", bar('2'), bar('2'))),
            (FlowerKind::Eight, "3".into(), format!("137{r}")),
            (FlowerKind::Eight, bar('4'), format!("{}{}7{r}", bar('1'), bar('4'))),
            (FlowerKind::Eight, "5".into(), format!("157{r}")),
            (FlowerKind::Eight, bar('6'), format!("{}{}7{r}", bar('6'), bar('6'))),
        ];
        assert_eq!(t.petals, cells.to_vec());
        let distinct: std::collections::BTreeSet<&String> = t.petals.iter().map(|c| &c.2).collect();
        assert_eq!(distinct.len(), 17);
    }

    #[test]
    fn one_flower_and_centres_only() {
        use crate::heptagrid::{Region, TileAddress};
        use crate::tiles::{solve_region, Patch, Placement, SolveMode, SolveOutcome};
        let ts = mantilla_tileset();
        let seed: Patch = [Placement::new(TileAddress::Center, "F", 0)].into_iter().collect();
        let region = Region::Ball { center: TileAddress::Center, radius: 1 };
        let SolveOutcome::Sat(p) = solve_region(&ts, &region, &seed, 1_000_000, SolveMode::First).unwrap() else {
            panic!("a single F flower tiles")
        };
        assert_eq!(p.len(), 8);
        let fl = flowers_of(&ts, &p).unwrap();
        assert_eq!(fl.len(), 1);
        assert_eq!(fl[0].kind, FlowerKind::F);

        let centres: Patch = region.tiles().unwrap().into_iter().map(|a| Placement::new(a, "F", 0)).collect();
        assert!(matches!(flowers_of(&ts, &centres), Err(MantillaError::NotAMantilla(_))));
    }

    #[test]
    fn solver_tiles_ball_of_radius_three() {
        use crate::heptagrid::{Region, TileAddress};
        use crate::tiles::{check_patch, solve_region, Patch, SolveMode, SolveOutcome};
        let ts = mantilla_tileset();
        let region = Region::Ball { center: TileAddress::Center, radius: 3 };
        let out = solve_region(&ts, &region, &Patch::new(), 5_000_000, SolveMode::First).unwrap();
        let SolveOutcome::Sat(p) = out else { panic!("{:?}", out) };
        assert_eq!(p.len(), 85);
        assert!(check_patch(&ts, &p).unwrap().is_empty());
    }
}
