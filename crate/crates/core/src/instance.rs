//! Stochastic instances: a weighted rooted tree plus per-vertex Poisson
//! arrival rates, with heaviness computation and light/heavy classification.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tree::Tree;

/// Classification of an instance by its arrival rates.
///
/// `Light` means total heaviness π ≤ 1. `Heavy` means every positive-rate
/// vertex u satisfies w_u · λ(u) ≥ 1. The two can only coincide in the
/// degenerate boundary case of a single positive-rate vertex with π = 1
/// exactly; we report `Heavy` there so the outcome is deterministic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum InstanceClass {
    Light,
    Heavy,
    Neither,
}

/// A tree together with an arrival rate per vertex.
///
/// Immutable after construction; the root always has rate 0 and at least one
/// vertex has a positive rate.
#[derive(Debug, Clone)]
pub struct Instance {
    tree: Tree,
    rates: Vec<f64>,
}

impl Instance {
    pub fn new(tree: Tree, rates: Vec<f64>) -> Result<Instance> {
        if rates.len() != tree.len() {
            return Err(Error::InvalidInput(format!(
                "{} rates for {} vertices",
                rates.len(),
                tree.len()
            )));
        }
        if let Some(u) = rates.iter().position(|r| !(*r >= 0.0)) {
            return Err(Error::InvalidInput(format!(
                "rate of vertex {u} is not a finite non-negative number"
            )));
        }
        if rates[tree.root()] != 0.0 {
            return Err(Error::InvalidInput(
                "the tree root must have arrival rate 0".into(),
            ));
        }
        if !rates.iter().any(|&r| r > 0.0) {
            return Err(Error::InvalidInput(
                "at least one vertex needs a positive rate".into(),
            ));
        }
        Ok(Instance { tree, rates })
    }

    pub fn tree(&self) -> &Tree {
        &self.tree
    }

    pub fn rate(&self, u: usize) -> f64 {
        self.rates[u]
    }

    pub fn rates(&self) -> &[f64] {
        &self.rates
    }

    /// λ(T): total arrival rate.
    pub fn total_rate(&self) -> f64 {
        self.rates.iter().sum()
    }

    /// Total rate of the subtree rooted at `u`.
    pub fn subtree_rate(&self, u: usize) -> f64 {
        self.tree
            .subtree_vertices(u)
            .into_iter()
            .map(|v| self.rates[v])
            .sum()
    }

    /// Heaviness π of the subtree rooted at `subtree_root`:
    /// Σ λ(u) · d(u, subtree_root) over the subtree.
    pub fn heaviness_of_subtree(&self, subtree_root: usize) -> Result<f64> {
        if subtree_root >= self.tree.len() {
            return Err(Error::InvalidInput(format!(
                "unknown vertex id {subtree_root}"
            )));
        }
        let base = self.tree.dist_to_root(subtree_root);
        Ok(self
            .tree
            .subtree_vertices(subtree_root)
            .into_iter()
            .map(|u| self.rates[u] * (self.tree.dist_to_root(u) - base))
            .sum())
    }

    /// Heaviness of the whole instance, π(T, λ).
    pub fn heaviness(&self) -> f64 {
        self.heaviness_of_subtree(self.tree.root())
            .expect("root is always valid")
    }

    /// The top vertex γ(U) of a connected vertex set, erroring if `vertices`
    /// does not induce a connected subtree.
    pub fn set_root(&self, vertices: &[usize]) -> Result<usize> {
        if vertices.is_empty() {
            return Err(Error::InvalidInput("empty vertex set".into()));
        }
        let mut member = vec![false; self.tree.len()];
        for &v in vertices {
            if v >= self.tree.len() {
                return Err(Error::InvalidInput(format!("unknown vertex id {v}")));
            }
            member[v] = true;
        }
        // The set is connected iff exactly one member has its parent outside.
        let mut top = None;
        for &v in vertices {
            let outside = match self.tree.parent(v) {
                Some(p) => !member[p],
                None => true,
            };
            if outside && top.replace(v).is_some() {
                return Err(Error::InvalidInput("vertex set is not connected".into()));
            }
        }
        Ok(top.expect("non-empty set has a top vertex"))
    }

    /// π(U) for a connected vertex set, with distances measured to γ(U).
    pub fn heaviness_of_set(&self, vertices: &[usize]) -> Result<f64> {
        let top = self.set_root(vertices)?;
        let base = self.tree.dist_to_root(top);
        Ok(vertices
            .iter()
            .map(|&u| self.rates[u] * (self.tree.dist_to_root(u) - base))
            .sum())
    }

    /// True iff every positive-rate vertex u has w_u · λ(u) ≥ 1.
    pub fn is_heavy(&self) -> bool {
        (0..self.tree.len())
            .filter(|&u| u != self.tree.root() && self.rates[u] > 0.0)
            .all(|u| self.tree.edge_weight(u) * self.rates[u] >= 1.0)
    }

    pub fn classify(&self) -> InstanceClass {
        if self.is_heavy() {
            InstanceClass::Heavy
        } else if self.heaviness() <= 1.0 {
            InstanceClass::Light
        } else {
            InstanceClass::Neither
        }
    }

    pub fn to_file(&self) -> InstanceFile {
        InstanceFile::from_instance(self)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("instance serializes")
    }

    pub fn from_json(text: &str) -> Result<Instance> {
        let file: InstanceFile = serde_json::from_str(text)?;
        file.into_instance()
    }
}

/// On-disk JSON schema for instances.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InstanceFile {
    pub vertices: usize,
    pub root: usize,
    /// `[child, parent, weight]` triples.
    pub edges: Vec<(usize, usize, f64)>,
    /// Vertex id (as a string key) to arrival rate; absent means 0.
    pub rates: BTreeMap<String, f64>,
}

impl InstanceFile {
    pub fn from_instance(instance: &Instance) -> InstanceFile {
        let tree = instance.tree();
        let edges = (0..tree.len())
            .filter(|&u| u != tree.root())
            .map(|u| (u, tree.parent(u).unwrap(), tree.edge_weight(u)))
            .collect();
        let rates = (0..tree.len())
            .filter(|&u| instance.rate(u) > 0.0)
            .map(|u| (u.to_string(), instance.rate(u)))
            .collect();
        InstanceFile {
            vertices: tree.len(),
            root: tree.root(),
            edges,
            rates,
        }
    }

    pub fn into_instance(self) -> Result<Instance> {
        let tree = Tree::from_edges(self.vertices, self.root, &self.edges)?;
        let mut rates = vec![0.0; self.vertices];
        for (key, rate) in &self.rates {
            let id: usize = key
                .parse()
                .map_err(|_| Error::InvalidInput(format!("bad vertex id {key:?} in rates")))?;
            if id >= self.vertices {
                return Err(Error::InvalidInput(format!("rate for unknown vertex {id}")));
            }
            rates[id] = *rate;
        }
        Instance::new(tree, rates)
    }
}

/// Single edge of weight `w` with leaf rate `lambda`; the smallest instance.
pub fn single_edge_instance(w: f64, lambda: f64) -> Result<Instance> {
    if !(w > 0.0) || !(lambda > 0.0) {
        return Err(Error::InvalidInput(format!(
            "single edge needs w > 0 and λ > 0, got {w}, {lambda}"
        )));
    }
    Instance::new(Tree::single_edge(w), vec![0.0, lambda])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn heaviness_of_single_edge_is_w_lambda() {
        let inst = single_edge_instance(3.0, 0.25).unwrap();
        assert_eq!(inst.heaviness(), 0.75);
    }

    #[test]
    fn heaviness_of_chain() {
        // γ—u (w=2, λ=0.1), u—v (w=3, λ=0.2): π = 0.1·2 + 0.2·5 = 1.2.
        let tree = Tree::from_edges(3, 0, &[(1, 0, 2.0), (2, 1, 3.0)]).unwrap();
        let inst = Instance::new(tree, vec![0.0, 0.1, 0.2]).unwrap();
        assert!((inst.heaviness() - 1.2).abs() < 1e-12);
    }

    #[test]
    fn heaviness_of_singleton_set_is_zero() {
        let inst = single_edge_instance(5.0, 1.0).unwrap();
        assert_eq!(inst.heaviness_of_set(&[1]).unwrap(), 0.0);
    }

    #[test]
    fn disconnected_set_is_rejected() {
        let tree = Tree::from_edges(4, 0, &[(1, 0, 1.0), (2, 1, 1.0), (3, 1, 1.0)]).unwrap();
        let inst = Instance::new(tree, vec![0.0, 1.0, 1.0, 1.0]).unwrap();
        assert!(inst.heaviness_of_set(&[2, 3]).is_err());
        assert_eq!(inst.set_root(&[1, 2, 3]).unwrap(), 1);
    }

    #[test]
    fn classification_examples() {
        assert_eq!(
            single_edge_instance(2.0, 1.0).unwrap().classify(),
            InstanceClass::Heavy
        );
        assert_eq!(
            single_edge_instance(1.0, 0.5).unwrap().classify(),
            InstanceClass::Light
        );
    }

    #[test]
    fn star_with_heavy_trunk_and_light_leaves_is_neither() {
        // Trunk of weight √n above n unit edges with rates 1/n.
        let n = 16usize;
        let mut edges = vec![(1usize, 0usize, (n as f64).sqrt())];
        let mut rates = vec![0.0, 0.0];
        for leaf in 0..n {
            edges.push((2 + leaf, 1, 1.0));
            rates.push(1.0 / n as f64);
        }
        let tree = Tree::from_edges(n + 2, 0, &edges).unwrap();
        let inst = Instance::new(tree, rates).unwrap();
        assert_eq!(inst.classify(), InstanceClass::Neither);
    }

    #[test]
    fn heaviness_is_additive_over_sibling_subtrees() {
        let tree = Tree::from_edges(
            6,
            0,
            &[
                (1, 0, 1.5),
                (2, 0, 0.5),
                (3, 1, 2.0),
                (4, 1, 1.0),
                (5, 2, 3.0),
            ],
        )
        .unwrap();
        let inst = Instance::new(tree, vec![0.0, 0.3, 0.1, 0.2, 0.4, 0.05]).unwrap();
        let root = inst.tree().root();
        let total = inst.heaviness();
        let via_children: f64 = inst
            .tree()
            .children(root)
            .iter()
            .map(|&c| {
                inst.heaviness_of_subtree(c).unwrap()
                    + inst.subtree_rate(c) * inst.tree().edge_weight(c)
            })
            .sum();
        assert!((total - via_children).abs() < 1e-12);
    }

    #[test]
    fn json_round_trip() {
        let tree = Tree::from_edges(3, 0, &[(1, 0, 2.0), (2, 1, 3.0)]).unwrap();
        let inst = Instance::new(tree, vec![0.0, 0.1, 0.2]).unwrap();
        let back = Instance::from_json(&inst.to_json()).unwrap();
        assert_eq!(back.tree().len(), 3);
        assert_eq!(back.rate(2), 0.2);
        assert_eq!(back.tree().edge_weight(2), 3.0);
    }

    #[test]
    fn requests_at_root_rate_rejected() {
        let tree = Tree::single_edge(1.0);
        assert!(Instance::new(tree, vec![0.5, 1.0]).is_err());
    }
}
