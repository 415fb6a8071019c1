//! Deterministic instance generators for experiments.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::{Instance, InstanceClass};
use crate::tree::Tree;

/// Families of generated instances. All generators are deterministic in the
/// seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum InstanceKind {
    /// One edge of the given weight with the given leaf rate.
    SingleEdge { weight: f64, rate: f64 },
    /// A trunk of weight √n above n unit-weight leaves of rate 1/n each;
    /// neither light nor heavy, and the separation workhorse between the
    /// on-arrival and periodic strategies.
    SeparationStar { n: usize },
    /// Uniformly random attachment tree with uniform weights and rates.
    RandomTree {
        vertices: usize,
        max_depth: usize,
        weight_range: (f64, f64),
        rate_range: (f64, f64),
        /// Restrict attachment so the root keeps exactly one child.
        single_child_root: bool,
    },
    /// Random tree with rates rescaled to a target heaviness at most one.
    LightRandom { vertices: usize, max_depth: usize },
    /// Random tree with weights raised until every positive-rate vertex
    /// satisfies the heavy condition.
    HeavyRandom { vertices: usize, max_depth: usize },
}

fn uniform_in(rng: &mut ChaCha12Rng, range: (f64, f64)) -> f64 {
    range.0 + (range.1 - range.0) * rng.random::<f64>()
}

fn random_tree(
    rng: &mut ChaCha12Rng,
    vertices: usize,
    max_depth: usize,
    weight_range: (f64, f64),
    rate_range: (f64, f64),
    single_child_root: bool,
) -> Result<Instance> {
    if vertices < 2 {
        return Err(Error::InvalidInput(
            "random tree needs at least 2 vertices".into(),
        ));
    }
    let min_depth = if single_child_root && vertices > 2 {
        2
    } else {
        1
    };
    if max_depth < min_depth {
        return Err(Error::InvalidInput(format!(
            "max depth {max_depth} cannot host {vertices} vertices with this shape"
        )));
    }
    let mut parents: Vec<usize> = Vec::with_capacity(vertices - 1);
    let mut depth = vec![0usize; vertices];
    for v in 1..vertices {
        let lo = if single_child_root && v >= 2 { 1 } else { 0 };
        let parent = loop {
            let p = rng.random_range(lo..v);
            if depth[p] < max_depth {
                break p;
            }
        };
        depth[v] = depth[parent] + 1;
        parents.push(parent);
    }
    let edges: Vec<(usize, usize, f64)> = parents
        .iter()
        .enumerate()
        .map(|(i, &p)| (i + 1, p, uniform_in(rng, weight_range)))
        .collect();
    let tree = Tree::from_edges(vertices, 0, &edges)?;
    let mut rates: Vec<f64> = std::iter::once(0.0)
        .chain((1..vertices).map(|_| uniform_in(rng, rate_range)))
        .collect();
    if !rates.iter().any(|&r| r > 0.0) {
        rates[vertices - 1] = 0.5 * (rate_range.0 + rate_range.1).max(0.5);
    }
    Instance::new(tree, rates)
}

pub fn generate_instance(kind: &InstanceKind, seed: u64) -> Result<Instance> {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    match *kind {
        InstanceKind::SingleEdge { weight, rate } => {
            crate::instance::single_edge_instance(weight, rate)
        }
        InstanceKind::SeparationStar { n } => {
            if n == 0 {
                return Err(Error::InvalidInput("star needs at least one leaf".into()));
            }
            let mut edges = vec![(1usize, 0usize, (n as f64).sqrt())];
            let mut rates = vec![0.0, 0.0];
            for leaf in 0..n {
                edges.push((2 + leaf, 1, 1.0));
                rates.push(1.0 / n as f64);
            }
            let tree = Tree::from_edges(n + 2, 0, &edges)?;
            Instance::new(tree, rates)
        }
        InstanceKind::RandomTree {
            vertices,
            max_depth,
            weight_range,
            rate_range,
            single_child_root,
        } => random_tree(
            &mut rng,
            vertices,
            max_depth,
            weight_range,
            rate_range,
            single_child_root,
        ),
        InstanceKind::LightRandom {
            vertices,
            max_depth,
        } => {
            let inst = random_tree(&mut rng, vertices, max_depth, (0.2, 2.0), (0.1, 1.5), false)?;
            let target = 0.3 + 0.6 * rng.random::<f64>();
            let scale = target / inst.heaviness();
            let rates = inst.rates().iter().map(|&r| r * scale).collect();
            let inst = Instance::new(inst.tree().clone(), rates)?;
            debug_assert_eq!(inst.classify(), InstanceClass::Light);
            Ok(inst)
        }
        InstanceKind::HeavyRandom {
            vertices,
            max_depth,
        } => {
            let inst = random_tree(&mut rng, vertices, max_depth, (0.2, 1.5), (0.4, 2.0), false)?;
            let tree = inst.tree();
            let edges: Vec<(usize, usize, f64)> = (0..tree.len())
                .filter(|&v| v != tree.root())
                .map(|v| {
                    let needed = 1.000001 / inst.rate(v);
                    (v, tree.parent(v).unwrap(), tree.edge_weight(v).max(needed))
                })
                .collect();
            let heavy_tree = Tree::from_edges(tree.len(), tree.root(), &edges)?;
            let inst = Instance::new(heavy_tree, inst.rates().to_vec())?;
            debug_assert_eq!(inst.classify(), InstanceClass::Heavy);
            Ok(inst)
        }
    }
}
