//! Two-dimensional structural entropy minimization.
//!
//! [`greedy_2d`] repeatedly applies the MERGE with the most negative entropy
//! change until no merge helps. [`hierarchical_2d`] runs that greedy step on
//! batches of at most `n` clusters at a time, each over the sub-graph induced
//! by its clusters, and feeds the resulting clusters into the next round,
//! so no single greedy run sees more than `n` clusters until the very end.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};

use rayon::prelude::*;

use crate::entropy::{merge_delta_from_parts, se_tree, ClusterStats};
use crate::error::{Error, Result};
use crate::graph::{NodeId, WeightedGraph};
use crate::partition::Partition;
use crate::scalar::Scalar;
use crate::tree::{two_level_tree, EncodingTree, TreeNodeId, ROOT};

/// Which cluster pairs the greedy step considers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CandidateScope {
    /// Rescans every pair of clusters before each merge.
    AllPairs,
    /// Only pairs joined by at least one edge, kept in a priority queue.
    ///
    /// A pair with no joining edge never has a negative entropy change, so
    /// both scopes accept the same merges.
    #[default]
    ConnectedPairs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MinimizerConfig {
    /// Clusters per batch (`n`).
    pub subgraph_size: usize,
    /// How many times `n` may double when a round makes no progress.
    pub max_n_doublings: usize,
    pub candidate_scope: CandidateScope,
}

impl Default for MinimizerConfig {
    fn default() -> Self {
        MinimizerConfig {
            subgraph_size: 300,
            max_n_doublings: 16,
            candidate_scope: CandidateScope::ConnectedPairs,
        }
    }
}

impl MinimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.subgraph_size < 2 {
            return Err(Error::Input(format!(
                "sub-graph size must be at least 2, got {}",
                self.subgraph_size
            )));
        }
        Ok(())
    }
}

/// One accepted merge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MergeStep<S> {
    pub first: TreeNodeId,
    pub second: TreeNodeId,
    pub merged: TreeNodeId,
    pub delta: S,
}

#[derive(Debug, Clone)]
pub struct GreedyOutcome<S> {
    /// Top-level clusters of the final tree, in first-seen order.
    pub partition: Partition,
    pub tree: EncodingTree<S>,
    pub steps: Vec<MergeStep<S>>,
}

#[derive(Debug, Clone, Copy)]
struct Candidate<S> {
    delta: S,
    first: TreeNodeId,
    second: TreeNodeId,
}

impl<S: Scalar> Candidate<S> {
    fn new(delta: S, a: TreeNodeId, b: TreeNodeId) -> Self {
        Candidate {
            delta,
            first: a.min(b),
            second: a.max(b),
        }
    }

    /// Total order: smaller delta first, then the lexicographically smaller id pair.
    fn precedes(&self, other: &Self) -> bool {
        self.cmp_key(other) == Ordering::Less
    }

    fn cmp_key(&self, other: &Self) -> Ordering {
        self.delta
            .partial_cmp(&other.delta)
            .unwrap_or(Ordering::Equal)
            .then(self.first.cmp(&other.first))
            .then(self.second.cmp(&other.second))
    }
}

impl<S: Scalar> PartialEq for Candidate<S> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp_key(other) == Ordering::Equal
    }
}

impl<S: Scalar> Eq for Candidate<S> {}

impl<S: Scalar> PartialOrd for Candidate<S> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<S: Scalar> Ord for Candidate<S> {
    // Reversed so that `BinaryHeap` pops the best candidate.
    fn cmp(&self, other: &Self) -> Ordering {
        other.cmp_key(self)
    }
}

/// Per-cluster bookkeeping shared by both scopes.
struct ClusterState<S> {
    stats: HashMap<TreeNodeId, ClusterStats<S>>,
    /// Weight of edges between each pair of adjacent clusters.
    links: HashMap<TreeNodeId, HashMap<TreeNodeId, S>>,
    total: ClusterStats<S>,
}

impl<S: Scalar> ClusterState<S> {
    fn new(graph: &WeightedGraph<S>, tree: &EncodingTree<S>) -> Result<Self> {
        let mut stats = HashMap::new();
        let mut links: HashMap<TreeNodeId, HashMap<TreeNodeId, S>> = HashMap::new();
        for &c in tree.children(ROOT) {
            stats.insert(c, ClusterStats::new(tree.volume(c), tree.cut(c)));
            links.insert(c, HashMap::new());
        }
        for (u, v, w) in graph.edges() {
            let (Some(cu), Some(cv)) = (tree.cluster_of(u), tree.cluster_of(v)) else {
                return Err(Error::Tree(format!("node {u} or {v} has no cluster")));
            };
            if cu != cv {
                *links.entry(cu).or_default().entry(cv).or_insert(S::zero()) += w;
                *links.entry(cv).or_default().entry(cu).or_insert(S::zero()) += w;
            }
        }
        Ok(ClusterState {
            stats,
            links,
            total: ClusterStats::new(graph.volume(), S::zero()),
        })
    }

    fn delta(&self, a: TreeNodeId, b: TreeNodeId, inter: S) -> S {
        merge_delta_from_parts(self.stats[&a], self.stats[&b], inter, self.total)
    }

    /// Folds `a` and `b` into `merged`, returning the merged cluster's neighbours.
    fn absorb(
        &mut self,
        tree: &EncodingTree<S>,
        a: TreeNodeId,
        b: TreeNodeId,
        merged: TreeNodeId,
    ) -> Vec<(TreeNodeId, S)> {
        self.stats.remove(&a);
        self.stats.remove(&b);
        self.stats
            .insert(merged, ClusterStats::new(tree.volume(merged), tree.cut(merged)));
        let mut big = self.links.remove(&a).unwrap_or_default();
        let mut small = self.links.remove(&b).unwrap_or_default();
        if big.len() < small.len() {
            std::mem::swap(&mut big, &mut small);
        }
        for (c, w) in small {
            *big.entry(c).or_insert(S::zero()) += w;
        }
        big.remove(&a);
        big.remove(&b);
        let mut neighbours: Vec<(TreeNodeId, S)> = big.iter().map(|(&c, &w)| (c, w)).collect();
        neighbours.sort_unstable_by_key(|&(c, _)| c);
        for &(c, w) in &neighbours {
            if let Some(adj) = self.links.get_mut(&c) {
                adj.remove(&a);
                adj.remove(&b);
                adj.insert(merged, w);
            }
        }
        self.links.insert(merged, big);
        neighbours
    }
}

/// Greedy 2D structural entropy minimization from a given two-level tree.
///
/// Each round merges the pair of top-level clusters with the most negative
/// entropy change, ties going to the smallest `(id, id)` pair, and stops when
/// no pair has a negative change.
pub fn greedy_2d<S: Scalar>(
    graph: &WeightedGraph<S>,
    initial: EncodingTree<S>,
    scope: CandidateScope,
) -> Result<GreedyOutcome<S>> {
    if initial.graph_node_count() != graph.node_count() {
        return Err(Error::Tree(format!(
            "tree encodes {} nodes but the graph has {}",
            initial.graph_node_count(),
            graph.node_count()
        )));
    }
    if !initial.is_two_level() {
        return Err(Error::Tree("greedy minimization needs a two-level tree".into()));
    }
    let mut tree = initial;
    let mut steps = Vec::new();
    if graph.volume() > S::zero() {
        let mut state = ClusterState::new(graph, &tree)?;
        match scope {
            CandidateScope::ConnectedPairs => {
                merge_connected_pairs(graph, &mut tree, &mut state, &mut steps)?
            }
            CandidateScope::AllPairs => merge_all_pairs(graph, &mut tree, &mut state, &mut steps)?,
        }
    }
    let partition = tree.partition()?;
    Ok(GreedyOutcome {
        partition,
        tree,
        steps,
    })
}

fn apply<S: Scalar>(
    graph: &WeightedGraph<S>,
    tree: &mut EncodingTree<S>,
    state: &mut ClusterState<S>,
    steps: &mut Vec<MergeStep<S>>,
    best: Candidate<S>,
) -> Result<Vec<(TreeNodeId, S)>> {
    let merged = tree.merge(graph, best.first, best.second)?;
    steps.push(MergeStep {
        first: best.first,
        second: best.second,
        merged,
        delta: best.delta,
    });
    Ok(state.absorb(tree, best.first, best.second, merged))
}

fn merge_connected_pairs<S: Scalar>(
    graph: &WeightedGraph<S>,
    tree: &mut EncodingTree<S>,
    state: &mut ClusterState<S>,
    steps: &mut Vec<MergeStep<S>>,
) -> Result<()> {
    let mut heap = BinaryHeap::new();
    for (&a, adj) in &state.links {
        for (&b, &inter) in adj {
            if a < b {
                heap.push(Candidate::new(state.delta(a, b, inter), a, b));
            }
        }
    }
    // A pair stays valid until one side is merged away, since its delta
    // depends only on the two clusters and the fixed total volume.
    while let Some(best) = heap.pop() {
        if !tree.contains(best.first) || !tree.contains(best.second) {
            continue;
        }
        if !(best.delta < S::zero()) {
            break;
        }
        let neighbours = apply(graph, tree, state, steps, best)?;
        let merged = steps.last().map(|s| s.merged).unwrap_or_default();
        for (c, inter) in neighbours {
            heap.push(Candidate::new(state.delta(merged, c, inter), merged, c));
        }
    }
    Ok(())
}

fn merge_all_pairs<S: Scalar>(
    graph: &WeightedGraph<S>,
    tree: &mut EncodingTree<S>,
    state: &mut ClusterState<S>,
    steps: &mut Vec<MergeStep<S>>,
) -> Result<()> {
    let mut position: Vec<usize> = Vec::new();
    let mut row: Vec<S> = Vec::new();
    loop {
        let clusters: Vec<TreeNodeId> = tree.children(ROOT).to_vec();
        let stats: Vec<ClusterStats<S>> = clusters.iter().map(|c| state.stats[c]).collect();
        position.clear();
        position.resize(tree.node_ids().last().map_or(0, |id| id + 1), usize::MAX);
        for (p, &c) in clusters.iter().enumerate() {
            position[c] = p;
        }
        row.clear();
        row.resize(clusters.len(), S::zero());

        let mut best: Option<Candidate<S>> = None;
        for (i, &a) in clusters.iter().enumerate() {
            let adj = &state.links[&a];
            for (&c, &w) in adj {
                row[position[c]] = w;
            }
            for (j, &b) in clusters.iter().enumerate().skip(i + 1) {
                let delta = merge_delta_from_parts(stats[i], stats[j], row[j], state.total);
                let candidate = Candidate::new(delta, a, b);
                if best.map_or(true, |cur| candidate.precedes(&cur)) {
                    best = Some(candidate);
                }
            }
            for &c in adj.keys() {
                row[position[c]] = S::zero();
            }
        }
        match best {
            Some(best) if best.delta < S::zero() => {
                apply(graph, tree, state, steps, best)?;
            }
            _ => return Ok(()),
        }
    }
}

/// Greedy minimization starting from every node in its own cluster.
pub fn greedy_2d_from_singletons<S: Scalar>(
    graph: &WeightedGraph<S>,
    scope: CandidateScope,
) -> Result<GreedyOutcome<S>> {
    let tree = two_level_tree(graph, &Partition::singletons(graph.node_count()))?;
    greedy_2d(graph, tree, scope)
}

#[derive(Debug, Clone)]
pub struct HierarchicalOutcome {
    /// Clusters in queue order.
    pub partition: Partition,
    pub rounds: usize,
    pub doublings: usize,
    /// The batch size hit its doubling cap before a single batch covered everything.
    pub capped: bool,
    /// Batch size in effect during the last round.
    pub final_subgraph_size: usize,
}

fn minimize_batch<S: Scalar>(
    graph: &WeightedGraph<S>,
    batch: &[Vec<NodeId>],
    scope: CandidateScope,
) -> Result<Vec<Vec<NodeId>>> {
    let nodes: Vec<NodeId> = batch.iter().flatten().copied().collect();
    let sub = graph.induced_subgraph(&nodes)?;
    let mut next = 0;
    let local: Vec<Vec<NodeId>> = batch
        .iter()
        .map(|cluster| {
            let ids = (next..next + cluster.len()).collect();
            next += cluster.len();
            ids
        })
        .collect();
    let tree = two_level_tree(&sub, &Partition::new(nodes.len(), local)?)?;
    let outcome = greedy_2d(&sub, tree, scope)?;
    Ok(outcome
        .partition
        .into_clusters()
        .into_iter()
        .map(|cluster| cluster.into_iter().map(|v| nodes[v]).collect())
        .collect())
}

/// Hierarchical 2D structural entropy minimization.
///
/// Starts from singletons in node order. Each round cuts the cluster queue
/// into consecutive batches of `n` clusters, minimizes each batch on the
/// sub-graph induced by its nodes (with that sub-graph's own volume), and
/// appends the results to the next queue in batch order. The run ends after a
/// round that fit in a single batch. A round that merges nothing doubles `n`;
/// if the doubling cap is exhausted the current clusters are returned.
pub fn hierarchical_2d<S: Scalar>(
    graph: &WeightedGraph<S>,
    config: &MinimizerConfig,
) -> Result<HierarchicalOutcome> {
    config.validate()?;
    let mut clusters: Vec<Vec<NodeId>> = (0..graph.node_count()).map(|v| vec![v]).collect();
    let mut size = config.subgraph_size;
    let mut rounds = 0;
    let mut doublings = 0;
    let mut capped = false;
    while !clusters.is_empty() {
        rounds += 1;
        let batches: Vec<&[Vec<NodeId>]> = clusters.chunks(size).collect();
        let single = batches.len() == 1;
        let results: Vec<Vec<Vec<NodeId>>> = batches
            .par_iter()
            .map(|batch| minimize_batch(graph, batch, config.candidate_scope))
            .collect::<Result<_>>()?;
        let next: Vec<Vec<NodeId>> = results.into_iter().flatten().collect();
        // Merges only ever shrink the queue, so an equal length means nothing merged.
        let unchanged = next.len() == clusters.len();
        clusters = next;
        if single {
            break;
        }
        if unchanged {
            if doublings == config.max_n_doublings {
                capped = true;
                break;
            }
            size = size.saturating_mul(2);
            doublings += 1;
        }
    }
    Ok(HierarchicalOutcome {
        partition: Partition::new(graph.node_count(), clusters)?,
        rounds,
        doublings,
        capped,
        final_subgraph_size: size,
    })
}

#[derive(Debug, Clone)]
pub struct Detection<S> {
    /// Detected events in canonical order.
    pub partition: Partition,
    /// Entropy of the two-level tree built from `partition`.
    pub se_2d: S,
    pub isolated: usize,
    pub rounds: usize,
    pub doublings: usize,
    pub capped: bool,
}

/// Event detection: isolated nodes become their own events and the rest of
/// the graph is partitioned hierarchically.
pub fn detect<S: Scalar>(graph: &WeightedGraph<S>, config: &MinimizerConfig) -> Result<Detection<S>> {
    config.validate()?;
    let n = graph.node_count();
    let (active, isolated): (Vec<NodeId>, Vec<NodeId>) =
        (0..n).partition(|&v| graph.degree(v) > S::zero());
    let mut clusters: Vec<Vec<NodeId>> = isolated.iter().map(|&v| vec![v]).collect();
    let mut rounds = 0;
    let mut doublings = 0;
    let mut capped = false;
    if !active.is_empty() {
        let sub = graph.induced_subgraph(&active)?;
        let outcome = hierarchical_2d(&sub, config)?;
        rounds = outcome.rounds;
        doublings = outcome.doublings;
        capped = outcome.capped;
        clusters.extend(
            outcome
                .partition
                .into_clusters()
                .into_iter()
                .map(|c| c.into_iter().map(|v| active[v]).collect()),
        );
    }
    let partition = Partition::new(n, clusters)?.canonical();
    let se_2d = se_tree(graph, &two_level_tree(graph, &partition)?)?.value;
    Ok(Detection {
        partition,
        se_2d,
        isolated: isolated.len(),
        rounds,
        doublings,
        capped,
    })
}
