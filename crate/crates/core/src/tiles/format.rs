//! Line-oriented text formats for tile sets and patches.
//!
//! ```text
//! tileset <name>
//! skeleton <id>,<id>,...
//! tile <id> kind=<tag> edges=<c1>,...,<c7> vertices=<m1>,...,<m7>
//! ```
//!
//! Colours are written `N<k>`, `N<k>~` (overlined), `P<k>` or `CH:<sym>`;
//! marks are `R` or `.`. A patch is one `place <address> <typeId> rot=<r>`
//! line per tile, in address order. Blank lines and `#` comments are
//! skipped on input; output is canonical and re-reads to the same value.

use std::fmt::Write as _;

use super::{EdgeColor, KindTag, Patch, Placement, TileError, TileSet, TileType, VertexMark};
use crate::heptagrid::TileAddress;

fn perr(line: usize, msg: impl Into<String>) -> TileError {
    TileError::Parse {
        line,
        msg: msg.into(),
    }
}

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end()))
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
}

pub fn write_tileset(ts: &TileSet) -> String {
    let mut out = String::new();
    writeln!(out, "tileset {}", ts.name).unwrap();
    if !ts.skeleton.is_empty() {
        writeln!(out, "skeleton {}", ts.skeleton.join(",")).unwrap();
    }
    for t in &ts.types {
        out.push_str(&write_tile(t));
        out.push('\n');
    }
    out
}

pub fn write_tile(t: &TileType) -> String {
    let edges: Vec<String> = t.edges.iter().map(|c| c.to_string()).collect();
    let marks: Vec<String> = t.vertices.iter().map(|m| m.symbol().to_string()).collect();
    format!(
        "tile {} kind={} edges={} vertices={}",
        t.id,
        t.kind.name(),
        edges.join(","),
        marks.join(",")
    )
}

pub fn parse_tileset(text: &str) -> Result<TileSet, TileError> {
    let mut name = None;
    let mut skeleton = Vec::new();
    let mut types = Vec::new();
    for (ln, line) in content_lines(text) {
        let (head, rest) = line.split_once(' ').unwrap_or((line, ""));
        match head {
            "tileset" => {
                if name.is_some() {
                    return Err(perr(ln, "duplicate tileset header"));
                }
                if rest.is_empty() {
                    return Err(perr(ln, "missing tile set name"));
                }
                name = Some(rest.to_string());
            }
            "skeleton" => {
                skeleton = rest
                    .split(',')
                    .filter(|s| !s.is_empty())
                    .map(str::to_string)
                    .collect();
            }
            "tile" => types.push(parse_tile(ln, rest)?),
            other => return Err(perr(ln, format!("unknown record {:?}", other))),
        }
    }
    let name = name.ok_or_else(|| perr(0, "missing tileset header"))?;
    TileSet::new(name, types, skeleton)
}

fn parse_tile(ln: usize, rest: &str) -> Result<TileType, TileError> {
    let fields: Vec<&str> = rest.split(' ').collect();
    if fields.len() != 4 {
        return Err(perr(ln, "expected: tile <id> kind=.. edges=.. vertices=.."));
    }
    let id = fields[0].to_string();
    let kind = fields[1]
        .strip_prefix("kind=")
        .ok_or_else(|| perr(ln, "missing kind="))?
        .parse::<KindTag>()
        .map_err(|e| perr(ln, e))?;
    let edges: Vec<EdgeColor> = fields[2]
        .strip_prefix("edges=")
        .ok_or_else(|| perr(ln, "missing edges="))?
        .split(',')
        .map(|c| c.parse::<EdgeColor>().map_err(|e| perr(ln, e)))
        .collect::<Result<_, _>>()?;
    let vertices: Vec<VertexMark> = fields[3]
        .strip_prefix("vertices=")
        .ok_or_else(|| perr(ln, "missing vertices="))?
        .split(',')
        .map(|m| match m {
            "R" => Ok(VertexMark::Red),
            "." => Ok(VertexMark::Plain),
            _ => Err(perr(ln, format!("bad vertex mark {:?}", m))),
        })
        .collect::<Result<_, _>>()?;
    let edges: [EdgeColor; 7] = edges
        .try_into()
        .map_err(|_| perr(ln, "a tile needs exactly 7 edge colours"))?;
    let vertices: [VertexMark; 7] = vertices
        .try_into()
        .map_err(|_| perr(ln, "a tile needs exactly 7 vertex marks"))?;
    Ok(TileType {
        id,
        kind,
        edges,
        vertices,
    })
}

pub fn write_patch(p: &Patch) -> String {
    let mut out = String::new();
    for pl in p.iter() {
        writeln!(out, "place {} {} rot={}", pl.address, pl.type_id, pl.rotation).unwrap();
    }
    out
}

pub fn parse_patch(text: &str) -> Result<Patch, TileError> {
    let mut p = Patch::new();
    for (ln, line) in content_lines(text) {
        let fields: Vec<&str> = line.split(' ').collect();
        if fields.len() != 4 || fields[0] != "place" {
            return Err(perr(ln, "expected: place <address> <typeId> rot=<r>"));
        }
        let address: TileAddress = fields[1].parse().map_err(|e: crate::heptagrid::GridError| perr(ln, e.to_string()))?;
        let rot = fields[3]
            .strip_prefix("rot=")
            .and_then(|r| r.parse::<u8>().ok())
            .filter(|r| *r < 7 && fields[3].len() == 5)
            .ok_or_else(|| perr(ln, "rotation must be rot=0..6"))?;
        let pl = Placement::new(address, fields[2], rot);
        if p.insert(pl).is_some() {
            return Err(perr(ln, format!("duplicate placement at {}", fields[1])));
        }
    }
    Ok(p)
}
