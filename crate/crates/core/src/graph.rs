//! Undirected weighted graphs over dense node ids.

use std::collections::btree_map::Entry;
use std::collections::{BTreeMap, HashMap};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Dense node index in `[0, node_count)`.
pub type NodeId = usize;

/// Immutable undirected graph with non-negative edge weights.
///
/// Adjacency lists are sorted by neighbour id, so weight lookups are binary
/// searches. Zero-weight edges are dropped at construction; they contribute
/// nothing to any entropy term.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedGraph<S> {
    adjacency: Vec<Vec<(NodeId, S)>>,
    degrees: Vec<S>,
    volume: S,
    edge_count: usize,
}

impl<S: Scalar> WeightedGraph<S> {
    /// Graph with `node_count` isolated nodes.
    pub fn empty(node_count: usize) -> Self {
        WeightedGraph {
            adjacency: vec![Vec::new(); node_count],
            degrees: vec![S::zero(); node_count],
            volume: S::zero(),
            edge_count: 0,
        }
    }

    /// Builds a graph from an edge list.
    ///
    /// Either orientation of a pair names the same edge. A pair may be listed
    /// more than once only with the identical weight.
    pub fn from_edges<I>(node_count: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (NodeId, NodeId, S)>,
    {
        let mut pairs: BTreeMap<(NodeId, NodeId), S> = BTreeMap::new();
        for (u, v, w) in edges {
            if u >= node_count || v >= node_count {
                return Err(Error::Graph(format!(
                    "edge ({u}, {v}) references a node outside [0, {node_count})"
                )));
            }
            if u == v {
                return Err(Error::Graph(format!("self-loop on node {u}")));
            }
            if !(w >= S::zero()) || !w.is_finite() {
                return Err(Error::Graph(format!(
                    "edge ({u}, {v}) has invalid weight {w}"
                )));
            }
            match pairs.entry((u.min(v), u.max(v))) {
                Entry::Vacant(slot) => {
                    slot.insert(w);
                }
                Entry::Occupied(slot) => {
                    if *slot.get() != w {
                        return Err(Error::Graph(format!(
                            "edge ({u}, {v}) listed with conflicting weights {} and {w}",
                            slot.get()
                        )));
                    }
                }
            }
        }

        let mut adjacency = vec![Vec::new(); node_count];
        let mut edge_count = 0;
        for ((u, v), w) in pairs {
            if w == S::zero() {
                continue;
            }
            adjacency[u].push((v, w));
            adjacency[v].push((u, w));
            edge_count += 1;
        }
        for list in &mut adjacency {
            list.sort_unstable_by_key(|&(v, _)| v);
        }
        Ok(Self::from_sorted_adjacency(adjacency, edge_count))
    }

    fn from_sorted_adjacency(adjacency: Vec<Vec<(NodeId, S)>>, edge_count: usize) -> Self {
        let degrees: Vec<S> = adjacency
            .iter()
            .map(|list| list.iter().map(|&(_, w)| w).sum())
            .collect();
        let volume = degrees.iter().copied().sum();
        WeightedGraph {
            adjacency,
            degrees,
            volume,
            edge_count,
        }
    }

    pub fn node_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    /// Weighted degree `d_i`.
    pub fn degree(&self, node: NodeId) -> S {
        self.degrees[node]
    }

    pub fn degrees(&self) -> &[S] {
        &self.degrees
    }

    /// Sum of all degrees, i.e. twice the total edge weight.
    pub fn volume(&self) -> S {
        self.volume
    }

    /// Neighbours of `node` with edge weights, sorted by neighbour id.
    pub fn neighbors(&self, node: NodeId) -> &[(NodeId, S)] {
        &self.adjacency[node]
    }

    pub fn weight(&self, u: NodeId, v: NodeId) -> Option<S> {
        let list = self.adjacency.get(u)?;
        list.binary_search_by_key(&v, |&(n, _)| n)
            .ok()
            .map(|i| list[i].1)
    }

    /// Each undirected edge once, as `(u, v, w)` with `u < v`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (NodeId, NodeId, S)> + '_ {
        self.adjacency.iter().enumerate().flat_map(|(u, list)| {
            list.iter()
                .filter(move |&&(v, _)| u < v)
                .map(move |&(v, w)| (u, v, w))
        })
    }

    /// Total weight of edges with exactly one endpoint in `members` (`g_α`).
    pub fn cut_weight(&self, members: &[NodeId]) -> Result<S> {
        let mut sorted = members.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        if let Some(&bad) = sorted.last().filter(|&&v| v >= self.node_count()) {
            return Err(Error::Graph(format!(
                "node {bad} is outside [0, {})",
                self.node_count()
            )));
        }
        Ok(self.cut_of_sorted(&sorted))
    }

    /// `members` must be sorted, deduplicated and in range.
    pub(crate) fn cut_of_sorted(&self, members: &[NodeId]) -> S {
        let mut cut = S::zero();
        for &u in members {
            for &(v, w) in &self.adjacency[u] {
                if members.binary_search(&v).is_err() {
                    cut = cut + w;
                }
            }
        }
        cut
    }

    pub(crate) fn volume_of(&self, members: &[NodeId]) -> S {
        members.iter().map(|&u| self.degrees[u]).sum()
    }

    /// Sub-graph induced by `nodes`, keeping only edges with both endpoints inside.
    ///
    /// Local id `i` of the result corresponds to `nodes[i]`.
    pub fn induced_subgraph(&self, nodes: &[NodeId]) -> Result<WeightedGraph<S>> {
        let mut local: HashMap<NodeId, NodeId> = HashMap::with_capacity(nodes.len());
        for (i, &g) in nodes.iter().enumerate() {
            if g >= self.node_count() {
                return Err(Error::Graph(format!(
                    "node {g} is outside [0, {})",
                    self.node_count()
                )));
            }
            if local.insert(g, i).is_some() {
                return Err(Error::Graph(format!("node {g} listed twice")));
            }
        }
        let mut edge_ends = 0;
        let adjacency: Vec<Vec<(NodeId, S)>> = nodes
            .iter()
            .map(|&g| {
                let mut list: Vec<(NodeId, S)> = self.adjacency[g]
                    .iter()
                    .filter_map(|&(v, w)| local.get(&v).map(|&lv| (lv, w)))
                    .collect();
                list.sort_unstable_by_key(|&(v, _)| v);
                edge_ends += list.len();
                list
            })
            .collect();
        Ok(Self::from_sorted_adjacency(adjacency, edge_ends / 2))
    }
}
