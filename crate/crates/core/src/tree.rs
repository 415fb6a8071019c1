//! Edge-weighted rooted trees.
//!
//! Vertices are dense indices `0..n`. Every non-root vertex `u` carries the
//! weight of the edge `(u, parent(u))`; distances are measured along
//! root-paths only.

use crate::error::{Error, Result};

/// An edge-weighted rooted tree with dense vertex ids.
///
/// Immutable after construction.
#[derive(Debug, Clone)]
pub struct Tree {
    root: usize,
    parent: Vec<Option<usize>>,
    /// Weight of the edge towards the parent; unused (0.0) at the root.
    weight: Vec<f64>,
    children: Vec<Vec<usize>>,
    dist_to_root: Vec<f64>,
    hop_depth: Vec<usize>,
}

impl Tree {
    /// Builds a tree from `(child, parent, weight)` edges.
    ///
    /// Rejects forests, cycles, repeated child entries, out-of-range ids and
    /// non-positive weights.
    pub fn from_edges(n: usize, root: usize, edges: &[(usize, usize, f64)]) -> Result<Tree> {
        if n == 0 {
            return Err(Error::InvalidInput(
                "tree must have at least one vertex".into(),
            ));
        }
        if root >= n {
            return Err(Error::InvalidInput(format!(
                "root id {root} out of range (n = {n})"
            )));
        }
        if edges.len() != n - 1 {
            return Err(Error::InvalidInput(format!(
                "expected {} edges for {} vertices, got {}",
                n - 1,
                n,
                edges.len()
            )));
        }
        let mut parent = vec![None; n];
        let mut weight = vec![0.0; n];
        let mut children = vec![Vec::new(); n];
        for &(child, par, w) in edges {
            if child >= n || par >= n {
                return Err(Error::InvalidInput(format!(
                    "edge ({child}, {par}) references vertex out of range (n = {n})"
                )));
            }
            if child == root {
                return Err(Error::InvalidInput("root cannot have a parent edge".into()));
            }
            if parent[child].is_some() {
                return Err(Error::InvalidInput(format!(
                    "vertex {child} has two parent edges"
                )));
            }
            if !(w > 0.0) {
                return Err(Error::InvalidInput(format!(
                    "edge ({child}, {par}) has non-positive weight {w}"
                )));
            }
            parent[child] = Some(par);
            weight[child] = w;
            children[par].push(child);
        }
        // Breadth-first from the root checks connectivity (and hence acyclicity,
        // since there are exactly n - 1 edges).
        let mut dist_to_root = vec![f64::NAN; n];
        let mut hop_depth = vec![usize::MAX; n];
        dist_to_root[root] = 0.0;
        hop_depth[root] = 0;
        let mut queue = std::collections::VecDeque::from([root]);
        let mut seen = 1usize;
        while let Some(u) = queue.pop_front() {
            for &c in &children[u] {
                dist_to_root[c] = dist_to_root[u] + weight[c];
                hop_depth[c] = hop_depth[u] + 1;
                seen += 1;
                queue.push_back(c);
            }
        }
        if seen != n {
            return Err(Error::InvalidInput(
                "tree is not connected: some vertices are unreachable from the root".into(),
            ));
        }
        Ok(Tree {
            root,
            parent,
            weight,
            children,
            dist_to_root,
            hop_depth,
        })
    }

    /// Convenience constructor for a root plus a single child.
    pub fn single_edge(weight: f64) -> Tree {
        Tree::from_edges(2, 0, &[(1, 0, weight)]).expect("single edge is always valid")
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn parent(&self, u: usize) -> Option<usize> {
        self.parent[u]
    }

    pub fn children(&self, u: usize) -> &[usize] {
        &self.children[u]
    }

    /// Weight of the edge from `u` to its parent. Panics on the root.
    pub fn edge_weight(&self, u: usize) -> f64 {
        assert_ne!(u, self.root, "the root has no parent edge");
        self.weight[u]
    }

    pub fn dist_to_root(&self, u: usize) -> f64 {
        self.dist_to_root[u]
    }

    pub fn hop_depth(&self, u: usize) -> usize {
        self.hop_depth[u]
    }

    /// Total weight of all edges.
    pub fn total_weight(&self) -> f64 {
        (0..self.len())
            .filter(|&u| u != self.root)
            .map(|u| self.weight[u])
            .sum()
    }

    /// True iff `anc` lies on the root-path of `u` (a vertex is its own
    /// ancestor).
    pub fn is_ancestor(&self, anc: usize, u: usize) -> bool {
        let mut v = u;
        loop {
            if v == anc {
                return true;
            }
            match self.parent[v] {
                Some(p) => v = p,
                None => return false,
            }
        }
    }

    /// Path length from `u` up to `anc`; `anc` must be an ancestor of `u`.
    pub fn dist(&self, u: usize, anc: usize) -> Result<f64> {
        if u >= self.len() || anc >= self.len() {
            return Err(Error::InvalidInput(format!(
                "vertex out of range: d({u}, {anc})"
            )));
        }
        if !self.is_ancestor(anc, u) {
            return Err(Error::InvalidInput(format!(
                "{anc} is not an ancestor of {u}"
            )));
        }
        Ok(self.dist_to_root[u] - self.dist_to_root[anc])
    }

    /// All vertices of the subtree rooted at `u`, in preorder.
    pub fn subtree_vertices(&self, u: usize) -> Vec<usize> {
        let mut out = vec![u];
        let mut i = 0;
        while i < out.len() {
            let v = out[i];
            out.extend_from_slice(&self.children[v]);
            i += 1;
        }
        out
    }

    pub fn leaves(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(|&u| self.children[u].is_empty())
    }

    /// Weight of the minimal rooted subtree containing all `locations`:
    /// the union of their root-paths, each edge counted once. Empty input
    /// costs 0.
    pub fn minimal_subtree_weight<I>(&self, locations: I) -> Result<f64>
    where
        I: IntoIterator<Item = usize>,
    {
        let mut on_path = vec![false; self.len()];
        let mut total = 0.0;
        for loc in locations {
            if loc >= self.len() {
                return Err(Error::InvalidInput(format!("unknown vertex id {loc}")));
            }
            let mut v = loc;
            while v != self.root && !on_path[v] {
                on_path[v] = true;
                total += self.weight[v];
                v = self.parent[v].expect("non-root vertex has a parent");
            }
        }
        Ok(total)
    }
}
