//! Poincaré-disk SVG pictures of patches.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::Deserialize;

use super::CliError;
use crate::heptagrid::geometry::{realize_geometry, Point};
use crate::heptagrid::Region;
use crate::mantilla::{FlowerKind, FlowerTree};
use crate::tiles::{KindTag, Patch, TileSet, VertexMark};

/// Colours and sizes of a rendering. Every field has a default, so a style
/// file only lists what it changes.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RenderStyle {
    pub stroke_width: f64,
    /// Radius of the unit disk in output units.
    pub disk_radius: f64,
    pub red_vertices: bool,
    /// Colour mantilla tiles by the kind of the flower that owns them.
    pub by_flower: bool,
    pub background: String,
    pub kind_colors: BTreeMap<String, String>,
    pub flower_colors: BTreeMap<String, String>,
}

impl Default for RenderStyle {
    fn default() -> Self {
        let kinds = [
            (KindTag::CentreF, "#e07a5f"),
            (KindTag::CentreGl, "#3d85c6"),
            (KindTag::CentreGr, "#6fa8dc"),
            (KindTag::Centre8, "#81b29a"),
            (KindTag::Petal, "#f4f1de"),
            (KindTag::Computation, "#f2cc8f"),
            (KindTag::Border, "#b5838d"),
        ];
        let flowers = [
            (FlowerKind::F, "#f6bd60"),
            (FlowerKind::Gl, "#84a59d"),
            (FlowerKind::Gr, "#a3c4bc"),
            (FlowerKind::Eight, "#f28482"),
            (FlowerKind::Seven, "#9a8c98"),
            (FlowerKind::Ten, "#4a4e69"),
        ];
        RenderStyle {
            stroke_width: 0.6,
            disk_radius: 500.0,
            red_vertices: true,
            by_flower: false,
            background: "#ffffff".into(),
            kind_colors: kinds.iter().map(|(k, c)| (k.name().to_string(), c.to_string())).collect(),
            flower_colors: flowers.iter().map(|(k, c)| (k.name().to_string(), c.to_string())).collect(),
        }
    }
}

impl RenderStyle {
    /// Reads a TOML style. Colour tables are merged over the defaults.
    pub fn from_toml(text: &str) -> Result<RenderStyle, CliError> {
        let mut s: RenderStyle = toml::from_str(text).map_err(|e| CliError::Style(e.to_string()))?;
        let d = RenderStyle::default();
        for (k, c) in d.kind_colors {
            s.kind_colors.entry(k).or_insert(c);
        }
        for (k, c) in d.flower_colors {
            s.flower_colors.entry(k).or_insert(c);
        }
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let kinds: BTreeSet<&str> = KindTag::ALL.iter().map(|k| k.name()).collect();
        if let Some(k) = self.kind_colors.keys().find(|k| !kinds.contains(k.as_str())) {
            return Err(CliError::Style(format!("unknown tile kind {}", k)));
        }
        if !(self.disk_radius > 0.0 && self.stroke_width >= 0.0) {
            return Err(CliError::Style("disk_radius must be positive and stroke_width non-negative".into()));
        }
        Ok(())
    }

    fn kind_color(&self, k: KindTag) -> Result<&str, CliError> {
        self.kind_colors.get(k.name()).map(String::as_str).ok_or_else(|| CliError::Style(format!("no colour for {}", k.name())))
    }
}

fn coord(v: f64) -> String {
    let s = format!("{:.3}", v);
    if s == "-0.000" { "0.000".into() } else { s }
}

fn xy(p: Point, r: f64) -> (String, String) {
    // SVG's y axis points down
    (coord(p.x * r), coord(-p.y * r))
}

/// Draws one straight-edged polygon per placed tile. Output depends only on
/// the patch, the tile set and the style.
pub fn render_svg(p: &Patch, ts: &TileSet, style: &RenderStyle) -> Result<String, CliError> {
    style.validate()?;
    let geo = realize_geometry(&Region::Explicit(p.addresses().cloned().collect()))?;
    let flower_fill: BTreeMap<_, _> = if style.by_flower && !p.is_empty() {
        let tree = FlowerTree::build(ts, p)?;
        let mut m = BTreeMap::new();
        for (c, k) in &tree.kind {
            m.insert(c.clone(), *k);
        }
        for (petal, owner) in &tree.owner {
            if let Some(k) = tree.kind.get(owner) {
                m.insert(petal.clone(), *k);
            }
        }
        m
    } else {
        BTreeMap::new()
    };

    let r = style.disk_radius;
    let pad = r * 0.02 + style.stroke_width;
    let mut s = String::new();
    writeln!(s, r#"<?xml version="1.0" encoding="UTF-8" standalone="no"?>"#).unwrap();
    writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{w}" height="{w}" viewBox="{o} {o} {w} {w}">"#,
        o = coord(-r - pad),
        w = coord(2.0 * (r + pad)),
    )
    .unwrap();
    writeln!(s, r#"<circle cx="0" cy="0" r="{}" fill="{}" stroke="black" stroke-width="{}"/>"#, coord(r), style.background, coord(style.stroke_width))
        .unwrap();
    let mut reds = BTreeSet::new();
    writeln!(s, r#"<g stroke="black" stroke-width="{}" stroke-linejoin="round">"#, coord(style.stroke_width)).unwrap();
    for pl in p.iter() {
        let t = ts.require(&pl.type_id)?;
        let h = &geo[&pl.address];
        let fill = match flower_fill.get(&pl.address) {
            Some(k) => style.flower_colors.get(k.name()).map(String::as_str).unwrap_or("none"),
            None => style.kind_color(t.kind)?,
        };
        let pts: Vec<String> = h
            .vertices
            .iter()
            .map(|v| {
                let (x, y) = xy(*v, r);
                format!("{},{}", x, y)
            })
            .collect();
        writeln!(
            s,
            r#"<polygon points="{}" fill="{}"><title>{} {} rot={}</title></polygon>"#,
            pts.join(" "),
            fill,
            pl.address,
            pl.type_id,
            pl.rotation
        )
        .unwrap();
        if style.red_vertices {
            for (v, pt) in h.vertices.iter().enumerate() {
                if t.vertex_at(pl.rotation, v) == VertexMark::Red {
                    // shared vertices are drawn once
                    reds.insert(xy(*pt, r));
                }
            }
        }
    }
    writeln!(s, "</g>").unwrap();
    if !reds.is_empty() {
        let dot = coord((style.stroke_width * 2.0).max(r * 0.004));
        writeln!(s, r#"<g fill="red">"#).unwrap();
        for (x, y) in &reds {
            writeln!(s, r#"<circle cx="{}" cy="{}" r="{}"/>"#, x, y, dot).unwrap();
        }
        writeln!(s, "</g>").unwrap();
    }
    writeln!(s, "</svg>").unwrap();
    Ok(s)
}
