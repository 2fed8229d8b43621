//! Structural entropy in bits.
//!
//! `se_1d` is the degree-distribution entropy of a graph, `se_1d_update`
//! advances it across a batch of edge insertions in time proportional to the
//! number of touched nodes, `se_tree` evaluates any encoding tree, and
//! `merge_delta` prices a MERGE of two top-level clusters without performing it.

use crate::error::{Error, Result};
use crate::graph::{NodeId, WeightedGraph};
use crate::scalar::{share_log2, xlog2x, Scalar};
use crate::tree::{EncodingTree, ROOT};

/// An entropy value in bits. `degenerate` marks a zero-volume graph, for
/// which every entropy is defined as zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeValue<S> {
    pub value: S,
    pub degenerate: bool,
}

impl<S: Scalar> SeValue<S> {
    pub fn new(value: S) -> Self {
        SeValue {
            value,
            degenerate: false,
        }
    }

    fn degenerate() -> Self {
        SeValue {
            value: S::zero(),
            degenerate: true,
        }
    }
}

/// Degree changes caused by inserting one batch of edges.
#[derive(Debug, Clone, PartialEq)]
pub struct DegreeDelta<S> {
    /// `(node, old degree, new degree)` for every node whose degree changed.
    pub affected: Vec<(NodeId, S, S)>,
    pub old_volume: S,
    pub new_volume: S,
}

impl<S: Scalar> DegreeDelta<S> {
    pub fn is_empty(&self) -> bool {
        self.affected.is_empty()
    }
}

/// One-dimensional structural entropy `-Σ (d_i/vol) log2(d_i/vol)`.
///
/// Isolated nodes contribute nothing.
pub fn se_1d<S: Scalar>(graph: &WeightedGraph<S>) -> SeValue<S> {
    se_1d_of_degrees(graph.degrees(), graph.volume())
}

/// [`se_1d`] over a bare degree sequence with the given volume.
pub fn se_1d_of_degrees<S: Scalar>(degrees: &[S], volume: S) -> SeValue<S> {
    if volume <= S::zero() {
        return SeValue::degenerate();
    }
    let sum: S = degrees.iter().map(|&d| share_log2(d, volume)).sum();
    SeValue::new(-sum)
}

/// Advances a one-dimensional entropy across an edge-insertion batch.
///
/// With `r = vol/vol'`, the new value is
/// `r (H - log2 r) + Σ_{j affected} [ (d_j/vol') log2(d_j/vol') - (d'_j/vol') log2(d'_j/vol') ]`,
/// which touches only the affected nodes.
pub fn se_1d_update<S: Scalar>(previous: SeValue<S>, delta: &DegreeDelta<S>) -> Result<SeValue<S>> {
    if delta.is_empty() {
        return Ok(previous);
    }
    let (old, new) = (delta.old_volume, delta.new_volume);
    if !(new > old) || old < S::zero() {
        return Err(Error::Delta(format!(
            "volume must grow across an insertion batch, got {old} -> {new}"
        )));
    }
    let mut correction = S::zero();
    for &(node, before, after) in &delta.affected {
        if !(after > before) || before < S::zero() {
            return Err(Error::Delta(format!(
                "degree of node {node} must grow, got {before} -> {after}"
            )));
        }
        correction = correction + share_log2(before, new) - share_log2(after, new);
    }
    let ratio = old / new;
    let rescaled = ratio * previous.value - xlog2x(ratio);
    Ok(SeValue::new(rescaled + correction))
}

/// Structural entropy of `graph` under an encoding tree of any height:
/// `-Σ_{α≠λ} (g_α/vol(λ)) log2(vol(α)/vol(α⁻))`.
pub fn se_tree<S: Scalar>(graph: &WeightedGraph<S>, tree: &EncodingTree<S>) -> Result<SeValue<S>> {
    if tree.graph_node_count() != graph.node_count() {
        return Err(Error::Tree(format!(
            "tree encodes {} nodes but the graph has {}",
            tree.graph_node_count(),
            graph.node_count()
        )));
    }
    let total = graph.volume();
    if total <= S::zero() {
        return Ok(SeValue::degenerate());
    }
    let mut sum = S::zero();
    for id in tree.node_ids().filter(|&id| id != ROOT) {
        let volume = tree.volume(id);
        let Some(parent) = tree.parent(id) else {
            continue;
        };
        let parent_volume = tree.volume(parent);
        if volume <= S::zero() || parent_volume <= S::zero() {
            continue;
        }
        sum = sum + tree.cut(id) / total * (volume / parent_volume).log2();
    }
    Ok(SeValue::new(-sum))
}

/// Volume and cut of one top-level cluster, plus `log2` of the volume.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClusterStats<S> {
    pub volume: S,
    pub cut: S,
    pub log_volume: S,
}

impl<S: Scalar> ClusterStats<S> {
    pub fn new(volume: S, cut: S) -> Self {
        ClusterStats {
            volume,
            cut,
            log_volume: volume.log2(),
        }
    }
}

/// Entropy change of merging two top-level clusters of a two-level tree.
///
/// This is the usual five-term MERGE expression
///
/// ```text
/// -g_n/V log2(v_n/V) - v_1/V log2(v_1/v_n) - v_2/V log2(v_2/v_n)
///     + g_1/V log2(v_1/V) + g_2/V log2(v_2/V)
/// ```
///
/// regrouped with `g_n = g_1 + g_2 - 2w` (`w` the weight joining the clusters) into
///
/// ```text
/// [ (v_1 - g_1) log2(v_n/v_1) + (v_2 - g_2) log2(v_n/v_2) + 2w log2(v_n/V) ] / V
/// ```
///
/// The first two terms are never negative and the third never positive, so a
/// pair with no joining edge can never look profitable through rounding. The
/// expression is symmetric bit-for-bit in its two clusters.
pub fn merge_delta_from_parts<S: Scalar>(
    first: ClusterStats<S>,
    second: ClusterStats<S>,
    inter: S,
    total: ClusterStats<S>,
) -> S {
    if total.volume <= S::zero() {
        return S::zero();
    }
    let merged_volume = first.volume + second.volume;
    if merged_volume <= S::zero() {
        return S::zero();
    }
    let log_merged = merged_volume.log2();
    let gap = |stats: ClusterStats<S>| {
        let internal = (stats.volume - stats.cut).max(S::zero());
        if internal == S::zero() {
            S::zero()
        } else {
            internal * (log_merged - stats.log_volume)
        }
    };
    let joining = if inter > S::zero() {
        (inter + inter) * (log_merged - total.log_volume).min(S::zero())
    } else {
        S::zero()
    };
    (gap(first) + gap(second) + joining) / total.volume
}

/// Entropy change `SE(after) - SE(before)` of merging top-level nodes `a` and `b`,
/// computed without touching the tree.
pub fn merge_delta<S: Scalar>(
    graph: &WeightedGraph<S>,
    tree: &EncodingTree<S>,
    a: crate::tree::TreeNodeId,
    b: crate::tree::TreeNodeId,
) -> Result<S> {
    if tree.graph_node_count() != graph.node_count() {
        return Err(Error::Tree("graph does not match the tree".into()));
    }
    let inter = tree.inter_weight(graph, a, b)?;
    Ok(merge_delta_from_parts(
        ClusterStats::new(tree.volume(a), tree.cut(a)),
        ClusterStats::new(tree.volume(b), tree.cut(b)),
        inter,
        ClusterStats::new(graph.volume(), S::zero()),
    ))
}
