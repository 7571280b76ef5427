//! Poincaré-disk realisation of the heptagrid.
//!
//! Heptagons are produced by hyperbolic reflections in their edges, starting
//! from a base heptagon centred at the origin with one vertex on the positive
//! horizontal axis. [`reflection_patch`] grows tiles purely geometrically and
//! is used as an oracle against the combinatorial neighbour rules;
//! [`realize_geometry`] places the tiles of a region by replaying reflections
//! along their tree paths.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::f64::consts::PI;

use super::{edge_towards, neighbors, GridError, Region, TileAddress};

/// Centres closer than this are the same tile.
pub const DEDUP_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const ORIGIN: Point = Point { x: 0.0, y: 0.0 };

    pub fn new(x: f64, y: f64) -> Point {
        Point { x, y }
    }

    fn sub(self, o: Point) -> Point {
        Point::new(self.x - o.x, self.y - o.y)
    }

    fn norm2(self) -> f64 {
        self.x * self.x + self.y * self.y
    }

    pub fn dist(self, o: Point) -> f64 {
        self.sub(o).norm2().sqrt()
    }
}

/// A placed heptagon: its hyperbolic centre and its vertices, counter-clockwise,
/// with vertex `i` between edges `i` and `i + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Heptagon {
    pub center: Point,
    pub vertices: [Point; 7],
}

impl Heptagon {
    /// The base tile. Its vertex 0 lies on the positive horizontal axis, so its
    /// edge `k` (from vertex `k - 1` to vertex `k`) faces direction
    /// `(2k - 1)π/7`.
    pub fn base() -> Heptagon {
        let r = base_vertex_radius();
        Heptagon {
            center: Point::ORIGIN,
            vertices: std::array::from_fn(|k| {
                let t = 2.0 * PI * k as f64 / 7.0;
                Point::new(r * t.cos(), r * t.sin())
            }),
        }
    }

    pub fn edge(&self, e: usize) -> (Point, Point) {
        (self.vertices[(e + 6) % 7], self.vertices[e])
    }

    /// Reflection of this heptagon in its edge `e`, renumbered so that edge
    /// `facing` of the image is the shared edge.
    pub fn reflect_across(&self, e: usize, facing: usize) -> Heptagon {
        let (p, q) = self.edge(e);
        let mirror = Mirror::through(p, q);
        // image.v(facing + t) = mirror(self.v(e - 1 - t))
        let mut vertices = [Point::ORIGIN; 7];
        for t in 0..7 {
            let src = (e + 7 * 2 - 1 - t) % 7;
            vertices[(facing + t) % 7] = mirror.apply(self.vertices[src]);
        }
        Heptagon {
            center: mirror.apply(self.center),
            vertices,
        }
    }
}

/// Euclidean radius of the base heptagon's vertices in the disk model.
pub fn base_vertex_radius() -> f64 {
    // cosh R = cot(π/7) cot(π/3) for the regular {7,3} heptagon.
    let cosh_r = 1.0 / (PI / 7.0).tan() / (PI / 3.0).tan();
    (cosh_r.acosh() / 2.0).tanh()
}

/// Reflection in a geodesic of the Poincaré disk.
#[derive(Debug, Clone, Copy)]
enum Mirror {
    /// Geodesic through the origin with the given unit direction.
    Line(Point),
    /// Circle orthogonal to the unit circle.
    Circle { center: Point, radius2: f64 },
}

impl Mirror {
    fn through(p: Point, q: Point) -> Mirror {
        let cross = p.x * q.y - p.y * q.x;
        if cross.abs() < 1e-14 {
            let d = if p.norm2() > q.norm2() { p } else { q };
            let n = d.norm2().sqrt();
            return Mirror::Line(Point::new(d.x / n, d.y / n));
        }
        // c·p = (1 + |p|²)/2 and c·q = (1 + |q|²)/2
        let bp = (1.0 + p.norm2()) / 2.0;
        let bq = (1.0 + q.norm2()) / 2.0;
        let det = p.x * q.y - p.y * q.x;
        let center = Point::new((bp * q.y - p.y * bq) / det, (p.x * bq - bp * q.x) / det);
        Mirror::Circle {
            center,
            radius2: center.norm2() - 1.0,
        }
    }

    fn apply(&self, z: Point) -> Point {
        match *self {
            Mirror::Line(u) => {
                let dot = z.x * u.x + z.y * u.y;
                Point::new(2.0 * dot * u.x - z.x, 2.0 * dot * u.y - z.y)
            }
            Mirror::Circle { center, radius2 } => {
                let d = z.sub(center);
                let k = radius2 / d.norm2();
                Point::new(center.x + k * d.x, center.y + k * d.y)
            }
        }
    }
}

/// Geometric placement of every tile of `region`.
///
/// Each tile is reached from the base heptagon by reflecting along its tree
/// path; distinct addresses whose centres fall within ten times the
/// de-duplication tolerance are reported as [`GridError::NumericalInstability`].
pub fn realize_geometry(region: &Region) -> Result<BTreeMap<TileAddress, Heptagon>, GridError> {
    let tiles = region.tiles()?;
    let mut cache: HashMap<TileAddress, Heptagon> = HashMap::new();
    cache.insert(TileAddress::Center, Heptagon::base());
    let mut out = BTreeMap::new();
    for t in tiles {
        let h = place(&t, &mut cache)?;
        out.insert(t, h);
    }
    check_separation(&out)?;
    Ok(out)
}

fn place(a: &TileAddress, cache: &mut HashMap<TileAddress, Heptagon>) -> Result<Heptagon, GridError> {
    if let Some(h) = cache.get(a) {
        return Ok(h.clone());
    }
    let parent = a.parent().unwrap_or(TileAddress::Center);
    let ph = place(&parent, cache)?;
    let e = edge_towards(&parent, a).ok_or_else(|| GridError::InvalidAddress(a.to_string()))?;
    // Every non-central tile faces its parent through edge 0.
    let h = ph.reflect_across(e, 0);
    cache.insert(a.clone(), h.clone());
    Ok(h)
}

fn check_separation(tiles: &BTreeMap<TileAddress, Heptagon>) -> Result<(), GridError> {
    let mut by_x: Vec<(&TileAddress, Point)> = tiles.iter().map(|(a, h)| (a, h.center)).collect();
    by_x.sort_by(|a, b| a.1.x.total_cmp(&b.1.x));
    let limit = 10.0 * DEDUP_TOLERANCE;
    for i in 0..by_x.len() {
        for j in i + 1..by_x.len() {
            if by_x[j].1.x - by_x[i].1.x > limit {
                break;
            }
            if by_x[i].1.dist(by_x[j].1) < limit {
                return Err(GridError::NumericalInstability(
                    by_x[i].0.clone(),
                    by_x[j].0.clone(),
                ));
            }
        }
    }
    Ok(())
}

/// Tiles grown by reflection alone, with adjacency discovered from
/// coincident centres. Independent of the combinatorial neighbour rules.
#[derive(Debug, Clone)]
pub struct ReflectionPatch {
    pub tiles: Vec<Heptagon>,
    /// `adjacency[t][e]` is the tile across edge `e` of tile `t`, when grown.
    pub adjacency: Vec<[Option<usize>; 7]>,
    /// Graph distance from tile 0 (the base heptagon).
    pub distance: Vec<usize>,
}

/// Grows all heptagons within graph distance `radius` of the base tile by
/// breadth-first reflection, merging images whose centres coincide.
pub fn reflection_patch(radius: usize) -> Result<ReflectionPatch, GridError> {
    let mut tiles = vec![Heptagon::base()];
    let mut distance = vec![0usize];
    let mut lookup = CenterIndex::default();
    lookup.insert(tiles[0].center, 0);
    let mut queue = VecDeque::from([0usize]);
    while let Some(t) = queue.pop_front() {
        if distance[t] == radius {
            continue;
        }
        for e in 0..7 {
            let img = tiles[t].reflect_across(e, 0);
            match lookup.find(img.center)? {
                Some(_) => {}
                None => {
                    let id = tiles.len();
                    lookup.insert(img.center, id);
                    tiles.push(img);
                    distance.push(distance[t] + 1);
                    queue.push_back(id);
                }
            }
        }
    }
    // Adjacency: the tile across edge e is the one whose centre is the
    // reflected centre.
    let mut adjacency = vec![[None; 7]; tiles.len()];
    for t in 0..tiles.len() {
        for e in 0..7 {
            let img = tiles[t].reflect_across(e, 0);
            adjacency[t][e] = lookup.find(img.center)?;
        }
    }
    Ok(ReflectionPatch {
        tiles,
        adjacency,
        distance,
    })
}

#[derive(Default)]
struct CenterIndex {
    cells: HashMap<(i64, i64), Vec<(Point, usize)>>,
}

impl CenterIndex {
    const CELL: f64 = 1e-6;

    fn key(p: Point) -> (i64, i64) {
        ((p.x / Self::CELL).floor() as i64, (p.y / Self::CELL).floor() as i64)
    }

    fn insert(&mut self, p: Point, id: usize) {
        self.cells.entry(Self::key(p)).or_default().push((p, id));
    }

    fn find(&self, p: Point) -> Result<Option<usize>, GridError> {
        let (kx, ky) = Self::key(p);
        let mut hit = None;
        for dx in -1..=1 {
            for dy in -1..=1 {
                if let Some(v) = self.cells.get(&(kx + dx, ky + dy)) {
                    for &(q, id) in v {
                        let d = p.dist(q);
                        if d < DEDUP_TOLERANCE {
                            hit = Some(id);
                        } else if d < 10.0 * DEDUP_TOLERANCE {
                            return Err(GridError::NumericalInstability(
                                TileAddress::Center,
                                TileAddress::Center,
                            ));
                        }
                    }
                }
            }
        }
        Ok(hit)
    }
}

/// Checks that the combinatorial ball of `radius` around the centre and the
/// reflection-grown ball are isomorphic as graphs whose edges are labelled
/// by their position in each tile's counter-clockwise edge cycle (up to a
/// per-tile rotation of labels).
///
/// The map is forced: the centre goes to the base heptagon with identical
/// edge labels and every other pairing is propagated through shared edges.
/// Returns the tile count on success.
pub fn check_oracle_isomorphism(radius: usize) -> Result<usize, String> {
    let comb = super::ball(&TileAddress::Center, radius).map_err(|e| e.to_string())?;
    let geo = reflection_patch(radius).map_err(|e| e.to_string())?;
    let geo_in: Vec<usize> = (0..geo.tiles.len()).filter(|&t| geo.distance[t] <= radius).collect();
    if geo_in.len() != comb.len() {
        return Err(format!(
            "ball sizes differ: combinatorial {} vs geometric {}",
            comb.len(),
            geo_in.len()
        ));
    }
    let mut to_geo: HashMap<TileAddress, (usize, usize)> = HashMap::new();
    let mut used = vec![false; geo.tiles.len()];
    to_geo.insert(TileAddress::Center, (0, 0));
    used[0] = true;
    let mut queue = VecDeque::from([TileAddress::Center]);
    while let Some(a) = queue.pop_front() {
        let (g, off) = to_geo[&a];
        let na = neighbors(&a).map_err(|e| e.to_string())?;
        for (e, b) in na.iter().enumerate() {
            let in_comb = comb.contains(b);
            let h = geo.adjacency[g][(e + off) % 7];
            let in_geo = h.map(|h| geo.distance[h] <= radius).unwrap_or(false);
            if in_comb != in_geo {
                return Err(format!("membership mismatch across edge {} of {}", e, a));
            }
            if !in_comb {
                continue;
            }
            let h = h.unwrap();
            let j = edge_towards(b, &a).ok_or_else(|| format!("{} does not list {}", b, a))?;
            let jg = (0..7)
                .find(|&k| geo.adjacency[h][k] == Some(g))
                .ok_or_else(|| format!("geometric tile {} does not list {}", h, g))?;
            let off_b = (jg + 7 - j) % 7;
            match to_geo.get(b) {
                Some(&(hh, oo)) => {
                    if hh != h || oo != off_b {
                        return Err(format!("inconsistent pairing for {}", b));
                    }
                }
                None => {
                    if used[h] {
                        return Err(format!("geometric tile {} matched twice", h));
                    }
                    used[h] = true;
                    to_geo.insert(b.clone(), (h, off_b));
                    queue.push_back(b.clone());
                }
            }
        }
    }
    if to_geo.len() != comb.len() {
        return Err("pairing does not cover the ball".into());
    }
    Ok(comb.len())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reflection_ball_sizes() {
        let p = reflection_patch(3).unwrap();
        let count = |r| p.distance.iter().filter(|&&d| d <= r).count();
        assert_eq!((0..4).map(count).collect::<Vec<_>>(), vec![1, 8, 29, 85]);
    }

    #[test]
    fn base_heptagon_edges_are_shared_with_its_images() {
        let base = Heptagon::base();
        for e in 0..7 {
            let img = base.reflect_across(e, 0);
            let (p, q) = base.edge(e);
            let (ip, iq) = img.edge(0);
            assert!(p.dist(iq) < 1e-12 && q.dist(ip) < 1e-12);
        }
    }

    #[test]
    fn realized_ball_one() {
        let g = realize_geometry(&Region::Ball {
            center: TileAddress::Center,
            radius: 1,
        })
        .unwrap();
        assert_eq!(g.len(), 8);
        let base = &g[&TileAddress::Center];
        let shared = g
            .values()
            .skip(1)
            .filter(|h| {
                (0..7).any(|e| {
                    let (p, q) = base.edge(e);
                    let (a, b) = h.edge(0);
                    p.dist(b) < 1e-9 && q.dist(a) < 1e-9
                })
            })
            .count();
        assert_eq!(shared, 7);
    }

    #[test]
    fn oracle_isomorphism_small() {
        assert_eq!(check_oracle_isomorphism(2).unwrap(), 29);
        assert_eq!(check_oracle_isomorphism(3).unwrap(), 85);
    }
}
