//! Combined scheduler for arbitrary instances.
//!
//! The vertex set is split into balanced parts: type-I parts are maximal
//! sets of heaviness at most one, type-II parts exceed one but every child
//! branch of their top vertex stays below one. Each non-root part is then
//! contracted into a pendant vertex of an augmented tree whose induced
//! instance is heavy, so the periodic scheduler can price it; requests in
//! the root part are served on arrival, all others at the tick that serves
//! their part's pendant vertex.

use serde::{Deserialize, Serialize};

use crate::baselines::instant;
use crate::error::{Error, Result};
use crate::instance::{Instance, InstanceClass};
use crate::plan::{plan_schedule, round_periods, saturation_partition, ClusterPlan};
use crate::schedule::{Request, RequestSequence, Schedule, Service};
use crate::tree::Tree;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PartKind {
    TypeI,
    TypeII,
}

/// A balanced part: a connected vertex set with its top vertex, heaviness
/// and total rate.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Part {
    pub vertices: Vec<usize>,
    pub root: usize,
    pub kind: PartKind,
    pub pi: f64,
    pub rate: f64,
}

/// A partition of the vertices into balanced parts. The part containing the
/// tree root is always type-I.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BalancedPartition {
    pub parts: Vec<Part>,
    pub root_part: usize,
}

impl BalancedPartition {
    /// π′(U): 1 for non-root type-I parts, π(U) otherwise.
    pub fn pi_prime(&self, part: usize) -> f64 {
        let p = &self.parts[part];
        if part != self.root_part && p.kind == PartKind::TypeI {
            1.0
        } else {
            p.pi
        }
    }

    /// Σ π′(U) over all parts.
    pub fn pi_prime_sum(&self) -> f64 {
        (0..self.parts.len()).map(|i| self.pi_prime(i)).sum()
    }

    /// Σ π′(U) over non-root parts.
    pub fn pi_prime_sum_nonroot(&self) -> f64 {
        (0..self.parts.len())
            .filter(|&i| i != self.root_part)
            .map(|i| self.pi_prime(i))
            .sum()
    }

    pub fn part_of_vertex(&self, n: usize) -> Vec<Option<usize>> {
        let mut map = vec![None; n];
        for (pi, p) in self.parts.iter().enumerate() {
            for &v in &p.vertices {
                map[v] = Some(pi);
            }
        }
        map
    }

    /// Checks the balanced-part conditions for every part. Total function:
    /// works on any claimed partition, not just ones built by the sweep.
    pub fn validate(&self, instance: &Instance) -> Result<()> {
        let tree = instance.tree();
        let n = tree.len();
        let mut seen = vec![false; n];
        for p in &self.parts {
            for &v in &p.vertices {
                if v >= n || seen[v] {
                    return Err(Error::InvalidInput(format!(
                        "vertex {v} missing or covered twice"
                    )));
                }
                seen[v] = true;
            }
        }
        if seen.iter().any(|&s| !s) {
            return Err(Error::InvalidInput(
                "parts do not cover all vertices".into(),
            ));
        }
        if self.root_part >= self.parts.len()
            || !self.parts[self.root_part].vertices.contains(&tree.root())
        {
            return Err(Error::InvalidInput(
                "root part does not contain the tree root".into(),
            ));
        }
        if self.parts[self.root_part].kind != PartKind::TypeI {
            return Err(Error::InvalidInput("root part must be type-I".into()));
        }
        for (idx, p) in self.parts.iter().enumerate() {
            let top = instance.set_root(&p.vertices)?;
            if top != p.root {
                return Err(Error::InvalidInput(format!(
                    "part {idx}: stored root {} is not the top vertex {top}",
                    p.root
                )));
            }
            let pi = instance.heaviness_of_set(&p.vertices)?;
            if (pi - p.pi).abs() > 1e-9 * pi.max(1.0) {
                return Err(Error::InvalidInput(format!(
                    "part {idx}: stored π mismatch"
                )));
            }
            match p.kind {
                PartKind::TypeI => {
                    if pi > 1.0 {
                        return Err(Error::InvalidInput(format!(
                            "part {idx}: type-I but π = {pi} > 1"
                        )));
                    }
                    if top != tree.root() {
                        let parent = tree.parent(top).expect("non-root top has a parent");
                        let mut with_parent = p.vertices.clone();
                        with_parent.push(parent);
                        let pi_up = instance.heaviness_of_set(&with_parent)?;
                        if pi_up <= 1.0 {
                            return Err(Error::InvalidInput(format!(
                                "part {idx}: type-I but not maximal (π with parent = {pi_up})"
                            )));
                        }
                    }
                }
                PartKind::TypeII => {
                    if pi <= 1.0 {
                        return Err(Error::InvalidInput(format!(
                            "part {idx}: type-II but π = {pi} <= 1"
                        )));
                    }
                    let member: std::collections::HashSet<usize> =
                        p.vertices.iter().copied().collect();
                    for &y in tree.children(top) {
                        if !member.contains(&y) {
                            continue;
                        }
                        let mut branch: Vec<usize> = tree
                            .subtree_vertices(y)
                            .into_iter()
                            .filter(|v| member.contains(v))
                            .collect();
                        branch.push(top);
                        let pi_branch = instance.heaviness_of_set(&branch)?;
                        if pi_branch >= 1.0 {
                            return Err(Error::InvalidInput(format!(
                                "part {idx}: type-II child branch at {y} has π = {pi_branch} >= 1"
                            )));
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

/// Builds a balanced partition by sweeping the vertices in order of
/// decreasing root distance, folding each vertex with its still-open child
/// sets and closing the set as soon as adding the parent would push the
/// heaviness past one.
///
/// The tree root must have exactly one child; multi-child roots are handled
/// branch by branch in [`GenPlanner`].
pub fn balanced_partition(instance: &Instance) -> Result<BalancedPartition> {
    let tree = instance.tree();
    if tree.children(tree.root()).len() != 1 {
        return Err(Error::InvalidInput(format!(
            "balanced partition needs a root with exactly one child, got {}",
            tree.children(tree.root()).len()
        )));
    }
    let n = tree.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        tree.dist_to_root(b)
            .total_cmp(&tree.dist_to_root(a))
            .then(a.cmp(&b))
    });

    // Open set per vertex: members plus aggregate Σλ and Σλ·dist.
    struct Open {
        vertices: Vec<usize>,
        rate: f64,
        rate_dist: f64,
    }
    let mut open: Vec<Option<Open>> = (0..n).map(|_| None).collect();
    let mut closed = vec![false; n];
    let mut parts: Vec<Part> = Vec::new();

    for &u in &order {
        let mut set = Open {
            vertices: vec![u],
            rate: instance.rate(u),
            rate_dist: instance.rate(u) * tree.dist_to_root(u),
        };
        for &c in tree.children(u) {
            if closed[c] {
                continue;
            }
            let child = open[c]
                .take()
                .expect("children are processed before their parent");
            set.vertices.extend(child.vertices);
            set.rate += child.rate;
            set.rate_dist += child.rate_dist;
        }
        let close = if u == tree.root() {
            true
        } else {
            let parent = tree.parent(u).unwrap();
            // π(U ∪ {parent}), measured at the parent.
            let pi_up = set.rate_dist - tree.dist_to_root(parent) * set.rate;
            pi_up > 1.0
        };
        if close {
            let pi = set.rate_dist - tree.dist_to_root(u) * set.rate;
            let mut vertices = set.vertices;
            vertices.sort_unstable();
            for &v in &vertices {
                closed[v] = true;
            }
            parts.push(Part {
                root: u,
                kind: if pi <= 1.0 {
                    PartKind::TypeI
                } else {
                    PartKind::TypeII
                },
                pi,
                rate: set.rate,
                vertices,
            });
        } else {
            open[u] = Some(set);
        }
    }
    let root_part = parts.len() - 1;
    Ok(BalancedPartition { parts, root_part })
}

/// The augmented instance: a copy of the tree where every non-root part U
/// gained a pendant vertex carrying the part's whole rate, placed so that
/// the pendant edge satisfies the heavy condition with equality (type-I) or
/// with the part's own heaviness (type-II).
#[derive(Debug, Clone)]
pub struct AugmentedInstance {
    pub instance: Instance,
    /// Pendant vertex per part (None for the root part).
    pub pendant_of_part: Vec<Option<usize>>,
    /// Attachment vertex per part: the new splitter for type-I, the part's
    /// top vertex for type-II.
    pub attach_of_part: Vec<Option<usize>>,
    /// Inverse of `pendant_of_part`, indexed by augmented vertex id.
    pub part_of_pendant: Vec<Option<usize>>,
    /// Number of original vertices; originals keep their ids.
    pub original_len: usize,
}

/// Nudges `w` upward until w·λ ≥ 1 holds in floating point; the heavy
/// condition must survive the classifier's exact comparison.
fn bump_to_heavy(mut w: f64, lambda: f64) -> f64 {
    while w * lambda < 1.0 {
        w = f64::from_bits(w.to_bits() + 1);
    }
    w
}

pub fn build_heavy_instance(
    instance: &Instance,
    partition: &BalancedPartition,
) -> Result<AugmentedInstance> {
    let tree = instance.tree();
    let n = tree.len();
    let mut next_id = n;
    let mut pendant_of_part = vec![None; partition.parts.len()];
    let mut attach_of_part = vec![None; partition.parts.len()];
    // Per original vertex: overridden (parent, weight) when a splitter cuts
    // its parent edge.
    let mut reparent: Vec<Option<(usize, f64)>> = vec![None; n];
    let mut extra_edges: Vec<(usize, usize, f64)> = Vec::new();

    for (idx, part) in partition.parts.iter().enumerate() {
        if idx == partition.root_part {
            continue;
        }
        if part.rate <= 0.0 {
            return Err(Error::InvalidInput(format!(
                "part rooted at {} has zero rate; cannot form its pendant vertex",
                part.root
            )));
        }
        match part.kind {
            PartKind::TypeI => {
                let top = part.root;
                let parent = tree.parent(top).expect("non-root part");
                let w_top = tree.edge_weight(top);
                let mut lower = (1.0 - part.pi) / part.rate;
                let mut upper = w_top - lower;
                if lower <= 0.0 {
                    // π(U) = 1 exactly: the splitter would sit on top of the
                    // part root, so attach the pendant there directly. This
                    // is the limit of the split construction and coincides
                    // with the π(U)/λ(U) pendant of the other part kind.
                    let pendant = next_id;
                    next_id += 1;
                    extra_edges.push((pendant, top, bump_to_heavy(1.0 / part.rate, part.rate)));
                    pendant_of_part[idx] = Some(pendant);
                    attach_of_part[idx] = Some(top);
                    continue;
                }
                // The two splitter edges must telescope back to the original
                // weight exactly; project until the rounded sum is a fixpoint.
                for _ in 0..8 {
                    if lower + upper == w_top {
                        break;
                    }
                    lower = w_top - upper;
                    if lower + upper == w_top {
                        break;
                    }
                    upper = w_top - lower;
                }
                if !(lower > 0.0) || !(upper > 0.0) || lower + upper != w_top {
                    return Err(Error::InvalidInput(format!(
                        "degenerate splitter weights ({lower}, {upper}) for part at {top}"
                    )));
                }
                let splitter = next_id;
                let pendant = next_id + 1;
                next_id += 2;
                reparent[top] = Some((splitter, lower));
                extra_edges.push((splitter, parent, upper));
                extra_edges.push((pendant, splitter, bump_to_heavy(1.0 / part.rate, part.rate)));
                pendant_of_part[idx] = Some(pendant);
                attach_of_part[idx] = Some(splitter);
            }
            PartKind::TypeII => {
                let pendant = next_id;
                next_id += 1;
                extra_edges.push((
                    pendant,
                    part.root,
                    bump_to_heavy(part.pi / part.rate, part.rate),
                ));
                pendant_of_part[idx] = Some(pendant);
                attach_of_part[idx] = Some(part.root);
            }
        }
    }

    let mut edges: Vec<(usize, usize, f64)> = Vec::with_capacity(next_id - 1);
    for (v, new_parent) in reparent.iter().enumerate() {
        if v == tree.root() {
            continue;
        }
        match new_parent {
            Some((parent, w)) => edges.push((v, *parent, *w)),
            None => edges.push((v, tree.parent(v).unwrap(), tree.edge_weight(v))),
        }
    }
    edges.extend(extra_edges);
    let aug_tree = Tree::from_edges(next_id, tree.root(), &edges)?;
    let mut rates = vec![0.0; next_id];
    let mut part_of_pendant = vec![None; next_id];
    for (idx, pendant) in pendant_of_part.iter().enumerate() {
        if let Some(z) = pendant {
            rates[*z] = partition.parts[idx].rate;
            part_of_pendant[*z] = Some(idx);
        }
    }
    let aug = Instance::new(aug_tree, rates)?;
    if aug.classify() != InstanceClass::Heavy {
        return Err(Error::InvalidInput(
            "augmented instance failed to classify heavy".into(),
        ));
    }
    Ok(AugmentedInstance {
        instance: aug,
        pendant_of_part,
        attach_of_part,
        part_of_pendant,
        original_len: n,
    })
}

/// Maps a request sequence onto the augmented tree: a request in part U
/// becomes a request at U's pendant vertex; root-part requests are dropped.
/// Returns the heavy sequence and, per heavy request, the index of the
/// original request. The map is order-preserving and prefix-respecting, so
/// it can be maintained online.
pub fn heavy_sequence(
    sequence: &RequestSequence,
    partition: &BalancedPartition,
    augmented: &AugmentedInstance,
) -> (RequestSequence, Vec<usize>) {
    let part_of = partition.part_of_vertex(augmented.original_len);
    let mut requests = Vec::new();
    let mut origin = Vec::new();
    for i in 0..sequence.len() {
        let r = sequence.get(i);
        let part = part_of[r.location].expect("partition covers all vertices");
        if part == partition.root_part {
            continue;
        }
        let z = augmented.pendant_of_part[part].expect("non-root part has a pendant");
        requests.push(Request {
            time: r.time,
            location: z,
        });
        origin.push(i);
    }
    let seq = RequestSequence::new(sequence.horizon(), requests, augmented.instance.tree())
        .expect("pendant locations are valid");
    (seq, origin)
}

/// Iteratively removes zero-rate leaves. Returns the pruned instance plus
/// the id maps in both directions.
pub fn prune_zero_rate_leaves(instance: &Instance) -> (Instance, Vec<usize>, Vec<Option<usize>>) {
    let tree = instance.tree();
    let n = tree.len();
    let mut keep = vec![true; n];
    loop {
        let mut changed = false;
        for v in 0..n {
            if v == tree.root() || !keep[v] || instance.rate(v) > 0.0 {
                continue;
            }
            let has_kept_child = tree.children(v).iter().any(|&c| keep[c]);
            if !has_kept_child {
                keep[v] = false;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    let mut new_of_old = vec![None; n];
    let mut old_of_new = Vec::new();
    for v in 0..n {
        if keep[v] {
            new_of_old[v] = Some(old_of_new.len());
            old_of_new.push(v);
        }
    }
    let edges: Vec<(usize, usize, f64)> = old_of_new
        .iter()
        .enumerate()
        .filter(|&(_, &old)| old != tree.root())
        .map(|(new, &old)| {
            (
                new,
                new_of_old[tree.parent(old).unwrap()].unwrap(),
                tree.edge_weight(old),
            )
        })
        .collect();
    let pruned_tree = Tree::from_edges(old_of_new.len(), new_of_old[tree.root()].unwrap(), &edges)
        .expect("pruning preserves tree structure");
    let rates = old_of_new.iter().map(|&old| instance.rate(old)).collect();
    let pruned = Instance::new(pruned_tree, rates).expect("pruned instance keeps positive rate");
    (pruned, old_of_new, new_of_old)
}

/// Periodic machinery of one root branch.
struct BranchPlanner {
    /// Original id → branch-local id.
    sub_of_orig: Vec<Option<usize>>,
    partition: BalancedPartition,
    /// None when the branch partition is a single (root) part.
    periodic: Option<BranchPeriodic>,
}

struct BranchPeriodic {
    augmented: AugmentedInstance,
    pruned: Instance,
    plan: ClusterPlan,
    /// Pendant vertex per part, in pruned-instance ids.
    pendant_pruned_of_part: Vec<Option<usize>>,
}

/// Preprocessed state of the combined scheduler for one instance: balanced
/// partitions, augmented instances and periodic plans per root branch.
/// Build once, then schedule any number of request sequences.
pub struct GenPlanner {
    n: usize,
    /// Branch index per original vertex, or None for the root and for
    /// zero-rate branches (whose requests are served on arrival).
    branch_of: Vec<Option<usize>>,
    branches: Vec<BranchPlanner>,
}

impl GenPlanner {
    pub fn new(instance: &Instance) -> Result<GenPlanner> {
        let tree = instance.tree();
        let n = tree.len();
        let mut branch_of = vec![None; n];
        let mut branches = Vec::new();
        for &child in tree.children(tree.root()) {
            if instance.subtree_rate(child) <= 0.0 {
                continue;
            }
            let subtree = tree.subtree_vertices(child);
            let mut sub_of_orig = vec![None; n];
            let mut orig_of_sub = vec![tree.root()];
            sub_of_orig[tree.root()] = Some(0);
            for &v in &subtree {
                sub_of_orig[v] = Some(orig_of_sub.len());
                orig_of_sub.push(v);
            }
            let edges: Vec<(usize, usize, f64)> = subtree
                .iter()
                .map(|&v| {
                    (
                        sub_of_orig[v].unwrap(),
                        sub_of_orig[tree.parent(v).unwrap()].unwrap(),
                        tree.edge_weight(v),
                    )
                })
                .collect();
            let sub_tree = Tree::from_edges(orig_of_sub.len(), 0, &edges)?;
            let rates = orig_of_sub.iter().map(|&v| instance.rate(v)).collect();
            let sub_instance = Instance::new(sub_tree, rates)?;
            let partition = balanced_partition(&sub_instance)?;
            let periodic = if partition.parts.len() == 1 {
                None
            } else {
                let augmented = build_heavy_instance(&sub_instance, &partition)?;
                let (pruned, _, new_of_old) = prune_zero_rate_leaves(&augmented.instance);
                let plan = round_periods(saturation_partition(&pruned)?);
                let pendant_pruned_of_part = augmented
                    .pendant_of_part
                    .iter()
                    .map(|z| z.map(|z| new_of_old[z].expect("pendants survive pruning")))
                    .collect();
                Some(BranchPeriodic {
                    augmented,
                    pruned,
                    plan,
                    pendant_pruned_of_part,
                })
            };
            for &v in &subtree {
                branch_of[v] = Some(branches.len());
            }
            branches.push(BranchPlanner {
                sub_of_orig,
                partition,
                periodic,
            });
        }
        Ok(GenPlanner {
            n,
            branch_of,
            branches,
        })
    }

    pub fn branch_count(&self) -> usize {
        self.branches.len()
    }

    /// The balanced partition of branch `b`, with vertices in branch-local
    /// ids (0 is the tree root).
    pub fn branch_partition(&self, b: usize) -> &BalancedPartition {
        &self.branches[b].partition
    }

    pub fn branch_augmented(&self, b: usize) -> Option<&AugmentedInstance> {
        self.branches[b].periodic.as_ref().map(|p| &p.augmented)
    }

    pub fn branch_plan(&self, b: usize) -> Option<(&Instance, &ClusterPlan)> {
        self.branches[b]
            .periodic
            .as_ref()
            .map(|p| (&p.pruned, &p.plan))
    }

    /// Σ π′(U) over all branches (counting each branch's root part).
    pub fn pi_prime_sum(&self) -> f64 {
        self.branches
            .iter()
            .map(|b| b.partition.pi_prime_sum())
            .sum()
    }

    /// Schedules one request sequence: root-part requests on arrival, each
    /// remaining request at the first tick that serves its part's pendant.
    pub fn schedule(&self, sequence: &RequestSequence) -> Result<Schedule> {
        if let Some(r) = sequence.requests().iter().find(|r| r.location >= self.n) {
            return Err(Error::InvalidInput(format!(
                "request at vertex {} outside the planned instance",
                r.location
            )));
        }
        let mut services: Vec<Service> = Vec::new();
        // Requests in zero-rate branches carry no plan; they go straight to
        // the on-arrival route.
        let mut instant_indices: Vec<usize> = (0..sequence.len())
            .filter(|&i| self.branch_of[sequence.get(i).location].is_none())
            .collect();
        for (bi, branch) in self.branches.iter().enumerate() {
            let branch_requests: Vec<usize> = (0..sequence.len())
                .filter(|&i| self.branch_of[sequence.get(i).location] == Some(bi))
                .collect();
            let Some(periodic) = &branch.periodic else {
                instant_indices.extend(branch_requests);
                continue;
            };
            let part_of = branch
                .partition
                .part_of_vertex(periodic.augmented.original_len);
            let mut heavy_requests = Vec::new();
            let mut origin = Vec::new();
            for &i in &branch_requests {
                let r = sequence.get(i);
                let sub = branch.sub_of_orig[r.location].expect("branch member");
                let part = part_of[sub].expect("partition covers the branch");
                if part == branch.partition.root_part {
                    instant_indices.push(i);
                    continue;
                }
                let z = periodic.pendant_pruned_of_part[part].expect("non-root part pendant");
                heavy_requests.push(Request {
                    time: r.time,
                    location: z,
                });
                origin.push(i);
            }
            let heavy_seq =
                RequestSequence::new(sequence.horizon(), heavy_requests, periodic.pruned.tree())?;
            let run = plan_schedule(&heavy_seq, &periodic.pruned, &periodic.plan)?;
            for s in run.schedule.services {
                services.push(Service {
                    time: s.time,
                    requests: s.requests.into_iter().map(|hi| origin[hi]).collect(),
                });
            }
        }
        // Requests outside any periodic branch are served on arrival.
        services.extend(instant_indices.into_iter().map(|i| Service {
            time: sequence.get(i).time,
            requests: vec![i],
        }));
        services.sort_by(|a, b| a.time.total_cmp(&b.time));
        Ok(Schedule::new(services))
    }
}

/// One-shot convenience wrapper: preprocess and schedule a single sequence.
pub fn gen_schedule(sequence: &RequestSequence, instance: &Instance) -> Result<Schedule> {
    let planner = GenPlanner::new(instance)?;
    let schedule = planner.schedule(sequence)?;
    debug_assert!(schedule.validate(sequence).is_ok());
    // A partition that collapses to the root part must reproduce the
    // on-arrival schedule exactly.
    if planner.branches.iter().all(|b| b.periodic.is_none()) {
        debug_assert_eq!(schedule, instant(sequence));
    }
    Ok(schedule)
}
