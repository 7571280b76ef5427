//! Fibonacci trees rooted anywhere in the grid, with any orientation.

use super::{neighbors, GridError, NodeKind, TileAddress};

/// A node of an oriented tree: its tile, the edge of that tile facing the
/// tree parent, and its colour.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TreeNode {
    pub address: TileAddress,
    pub up: usize,
    pub kind: NodeKind,
}

/// A Fibonacci tree grown from `root`. Sons sit at edge offsets 2, 3, 4 of
/// a white node and 3, 4 of a black one, counted counter-clockwise from the
/// edge facing the parent; a mirrored tree counts clockwise.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct OrientedTree {
    pub root: TreeNode,
    pub mirrored: bool,
}

impl OrientedTree {
    pub fn new(root: TileAddress, up: usize, kind: NodeKind, mirrored: bool) -> OrientedTree {
        OrientedTree { root: TreeNode { address: root, up: up % 7, kind }, mirrored }
    }

    /// The sector of the centre-based coordinate system rooted at `root`.
    pub fn of_sector_root(root: &TileAddress) -> Result<OrientedTree, GridError> {
        let kind = super::node_kind(root)?;
        Ok(OrientedTree::new(root.clone(), 0, kind, false))
    }

    /// Sons of `node`, left to right.
    pub fn children(&self, node: &TreeNode) -> Result<Vec<TreeNode>, GridError> {
        let n = neighbors(&node.address)?;
        let offsets: &[usize] = match node.kind {
            NodeKind::W => &[2, 3, 4],
            NodeKind::B => &[3, 4],
        };
        let mut out = Vec::with_capacity(offsets.len());
        for (i, &o) in offsets.iter().enumerate() {
            let o = if self.mirrored { 7 - o } else { o };
            let a = n[(node.up + o) % 7].clone();
            let up = neighbors(&a)?
                .iter()
                .position(|x| *x == node.address)
                .expect("adjacency is symmetric");
            out.push(TreeNode { address: a, up, kind: node.kind.children()[i] });
        }
        Ok(out)
    }

    /// Node reached from the root by a path of son indices.
    pub fn node(&self, path: &[u8]) -> Result<TreeNode, GridError> {
        let mut cur = self.root.clone();
        for &i in path {
            let mut cs = self.children(&cur)?;
            if i as usize >= cs.len() {
                return Err(GridError::InvalidAddress(format!("son {} of a {:?} node", i, cur.kind)));
            }
            cur = cs.swap_remove(i as usize);
        }
        Ok(cur)
    }

    /// Levels 0..depth, each left to right.
    pub fn levels(&self, depth: usize) -> Result<Vec<Vec<TreeNode>>, GridError> {
        let mut out: Vec<Vec<TreeNode>> = Vec::new();
        let mut cur = vec![self.root.clone()];
        for _ in 0..depth {
            let mut next = Vec::new();
            for t in &cur {
                next.extend(self.children(t)?);
            }
            out.push(std::mem::replace(&mut cur, next));
        }
        Ok(out)
    }

    /// Nodes whose whole ancestry satisfies `keep`, breadth first; also
    /// reports whether some kept node had a son that was refused.
    pub fn clipped(
        &self,
        mut keep: impl FnMut(&TileAddress) -> bool,
    ) -> Result<(Vec<TreeNode>, bool), GridError> {
        let mut out = Vec::new();
        let mut cut = false;
        if !keep(&self.root.address) {
            return Ok((out, true));
        }
        let mut i = 0;
        out.push(self.root.clone());
        while i < out.len() {
            for c in self.children(&out[i])? {
                if keep(&c.address) {
                    out.push(c);
                } else {
                    cut = true;
                }
            }
            i += 1;
        }
        Ok((out, cut))
    }
}
