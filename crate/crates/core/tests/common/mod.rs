//! Exact count of the tilings of Ball(Center, 1).
//!
//! Around the centre the ring is a 7-cycle, and every edge or vertex
//! constraint involves at most the centre and two consecutive ring tiles.
//! Vertex marks must be equal, so a constraint holds iff it holds pairwise,
//! and the number of tilings is a sum of traces of transfer matrices whose
//! entries come from `check_patch` on two-tile patches.

#![allow(dead_code)]

use hyperdomino::heptagrid::{Region, TileAddress};
use hyperdomino::tiles::{check_patch_with, EdgeColor, KindTag, NeighborCache, Patch, Placement, TileSet, TileType, VertexMark};

pub fn ball(r: usize) -> Region {
    Region::Ball { center: TileAddress::Center, radius: r }
}

fn options(ts: &TileSet) -> Vec<(String, u8)> {
    ts.types.iter().flat_map(|t| (0..7u8).map(move |r| (t.id.clone(), r))).collect()
}

fn consistent(ts: &TileSet, tiles: &[(TileAddress, &(String, u8))], cache: &mut NeighborCache) -> bool {
    let p: Patch = tiles.iter().map(|(a, (id, r))| Placement::new(a.clone(), id.clone(), *r)).collect();
    check_patch_with(ts, &p, cache).unwrap().is_empty()
}

pub fn exact_count(ts: &TileSet) -> u128 {
    let opts = options(ts);
    let n = opts.len();
    let ring: Vec<TileAddress> = (0..7).map(TileAddress::sector_root).collect();
    let mut cache = NeighborCache::default();
    let mut pair = |x: &TileAddress, i: usize, y: &TileAddress, j: usize| {
        consistent(ts, &[(x.clone(), &opts[i]), (y.clone(), &opts[j])], &mut cache)
    };
    // with_centre[k][c][a]: centre option c beside ring option a at ring k
    let with_centre: Vec<Vec<Vec<bool>>> = (0..7)
        .map(|k| (0..n).map(|c| (0..n).map(|a| pair(&TileAddress::Center, c, &ring[k], a)).collect()).collect())
        .collect();
    // along[k][a][b]: ring k-1 option a beside ring k option b
    let along: Vec<Vec<Vec<bool>>> = (0..7)
        .map(|k| (0..n).map(|a| (0..n).map(|b| pair(&ring[(k + 6) % 7], a, &ring[k], b)).collect()).collect())
        .collect();
    let mut total = 0u128;
    for c in 0..n {
        for s in (0..n).filter(|&s| with_centre[0][c][s]) {
            let mut ways = vec![0u128; n];
            ways[s] = 1;
            for k in 1..=7 {
                let mut next = vec![0u128; n];
                for b in (0..n).filter(|&b| with_centre[k % 7][c][b] && (k < 7 || b == s)) {
                    next[b] = (0..n).filter(|&a| along[k % 7][a][b]).map(|a| ways[a]).sum();
                }
                ways = next;
            }
            total += ways[s];
        }
    }
    total
}

/// A tile set from raw edge colours (1..=3) and vertex draws (0 is red).
pub fn tileset_from(raw: Vec<([u8; 7], [u8; 7])>) -> TileSet {
    let types = raw
        .into_iter()
        .enumerate()
        .map(|(i, (cs, vs))| TileType {
            id: format!("t{}", i),
            kind: KindTag::Computation,
            edges: cs.map(EdgeColor::num),
            vertices: vs.map(|v| if v == 0 { VertexMark::Red } else { VertexMark::Plain }),
        })
        .collect();
    TileSet::new("random", types, Vec::new()).unwrap()
}
