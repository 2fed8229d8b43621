//! Message-graph construction.
//!
//! Two edge sources feed the graph: attribute edges between messages that
//! share any attribute, and semantic edges from every message to its `k`
//! most cosine-similar messages. `k` is picked by inserting the `k`-th
//! neighbour layer one step at a time and tracking the one-dimensional
//! structural entropy of the growing graph incrementally; the first strict
//! local minimum of that trace wins.

use std::collections::{HashMap, HashSet};

use rayon::prelude::*;

use crate::entropy::{se_1d_of_degrees, se_1d_update, DegreeDelta, SeValue};
use crate::error::{Error, Result};
use crate::graph::{NodeId, WeightedGraph};
use crate::scalar::Scalar;

/// One social message.
///
/// Attributes are namespaced strings such as `user:alice` or `tag:#x`, so
/// values of different kinds never collide.
#[derive(Debug, Clone, PartialEq)]
pub struct MessageRecord<S> {
    pub id: String,
    pub attributes: Vec<String>,
    pub embedding: Vec<S>,
}

/// Pairs `(i, j)`, `i < j`, of messages sharing at least one attribute, sorted.
pub fn attribute_edges<S>(corpus: &[MessageRecord<S>]) -> Vec<(NodeId, NodeId)> {
    let mut index: HashMap<&str, Vec<NodeId>> = HashMap::new();
    for (i, record) in corpus.iter().enumerate() {
        for attribute in &record.attributes {
            let holders = index.entry(attribute.as_str()).or_default();
            if holders.last() != Some(&i) {
                holders.push(i);
            }
        }
    }
    let mut edges: Vec<(NodeId, NodeId)> = index
        .values()
        .flat_map(|holders| {
            holders
                .iter()
                .enumerate()
                .flat_map(move |(a, &i)| holders[a + 1..].iter().map(move |&j| (i, j)))
        })
        .collect();
    edges.sort_unstable();
    edges.dedup();
    edges
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor<S> {
    pub index: NodeId,
    pub similarity: S,
}

/// Every message's other messages, most cosine-similar first.
#[derive(Debug, Clone)]
pub struct NeighborRanking<S> {
    lists: Vec<Vec<Neighbor<S>>>,
    unit: Vec<Vec<S>>,
}

const TILE_ROWS: usize = 64;

impl<S: Scalar> NeighborRanking<S> {
    pub fn len(&self) -> usize {
        self.lists.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lists.is_empty()
    }

    /// Ranked neighbours of `node`; length `len() - 1`.
    pub fn neighbors(&self, node: NodeId) -> &[Neighbor<S>] {
        &self.lists[node]
    }

    /// Cosine similarity of two messages.
    pub fn cosine(&self, i: NodeId, j: NodeId) -> S {
        dot(&self.unit[i], &self.unit[j])
    }

    /// Edge weight `max(cos, 0)`.
    pub fn weight(&self, i: NodeId, j: NodeId) -> S {
        self.cosine(i, j).max(S::zero())
    }
}

fn dot<S: Scalar>(a: &[S], b: &[S]) -> S {
    a.iter().zip(b).fold(S::zero(), |acc, (&x, &y)| acc + x * y)
}

/// Ranks all other messages for every message by cosine similarity.
///
/// Ties go to the smaller index. Rows are processed in parallel tiles; the
/// result does not depend on the thread count.
pub fn rank_neighbors<S: Scalar>(corpus: &[MessageRecord<S>]) -> Result<NeighborRanking<S>> {
    let unit = unit_embeddings(corpus)?;
    let n = unit.len();
    let mut lists: Vec<Vec<Neighbor<S>>> = vec![Vec::new(); n];
    lists
        .par_chunks_mut(TILE_ROWS)
        .enumerate()
        .for_each(|(tile, rows)| {
            for (offset, row) in rows.iter_mut().enumerate() {
                let i = tile * TILE_ROWS + offset;
                let mut list: Vec<Neighbor<S>> = (0..n)
                    .filter(|&j| j != i)
                    .map(|j| Neighbor {
                        index: j,
                        similarity: dot(&unit[i], &unit[j]),
                    })
                    .collect();
                list.sort_by(|a, b| {
                    b.similarity
                        .partial_cmp(&a.similarity)
                        .expect("similarities are finite")
                        .then(a.index.cmp(&b.index))
                });
                *row = list;
            }
        });
    Ok(NeighborRanking { lists, unit })
}

fn unit_embeddings<S: Scalar>(corpus: &[MessageRecord<S>]) -> Result<Vec<Vec<S>>> {
    let Some(first) = corpus.first() else {
        return Ok(Vec::new());
    };
    let dim = first.embedding.len();
    if dim == 0 {
        return Err(Error::Input(format!(
            "message '{}' has an empty embedding",
            first.id
        )));
    }
    corpus
        .iter()
        .map(|record| {
            if record.embedding.len() != dim {
                return Err(Error::Input(format!(
                    "message '{}' has embedding dimension {}, expected {dim}",
                    record.id,
                    record.embedding.len()
                )));
            }
            if record.embedding.iter().any(|x| !x.is_finite()) {
                return Err(Error::Input(format!(
                    "message '{}' has a non-finite embedding component",
                    record.id
                )));
            }
            let norm = dot(&record.embedding, &record.embedding).sqrt();
            if norm == S::zero() || !norm.is_finite() {
                return Err(Error::Input(format!(
                    "message '{}' has a zero-norm embedding; cosine similarity is undefined",
                    record.id
                )));
            }
            Ok(record.embedding.iter().map(|&x| x / norm).collect())
        })
        .collect()
}

/// Which local minimum of the entropy trace picks `k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StablePoint {
    /// First strict local minimum, falling back to the global minimum.
    #[default]
    First,
    /// Global minimum over all `k`.
    Global,
}

/// One-dimensional entropy of the `k`-NN graph for `k = 1, 2, …`.
#[derive(Debug, Clone, PartialEq)]
pub struct SeTrace<S> {
    /// `values[k - 1]` is the entropy with every node linked to its top `k` neighbours.
    pub values: Vec<S>,
    pub chosen_k: usize,
    /// False when no strict local minimum existed and the global minimum was used.
    pub stable: bool,
}

/// Grows the `k`-NN graph one neighbour layer at a time.
///
/// Edges carry `max(cos, 0)`; pairs already present and weightless pairs are skipped.
#[derive(Debug, Clone)]
pub struct KnnGraphBuilder<'a, S> {
    ranking: &'a NeighborRanking<S>,
    layers: usize,
    degrees: Vec<S>,
    volume: S,
    edges: HashSet<(NodeId, NodeId)>,
}

impl<'a, S: Scalar> KnnGraphBuilder<'a, S> {
    pub fn new(ranking: &'a NeighborRanking<S>) -> Self {
        KnnGraphBuilder {
            ranking,
            layers: 0,
            degrees: vec![S::zero(); ranking.len()],
            volume: S::zero(),
            edges: HashSet::new(),
        }
    }

    /// Number of layers inserted so far, i.e. the current `k`.
    pub fn layers(&self) -> usize {
        self.layers
    }

    pub fn degrees(&self) -> &[S] {
        &self.degrees
    }

    pub fn volume(&self) -> S {
        self.volume
    }

    /// Inserts the edges from every node to its next-ranked neighbour.
    ///
    /// Returns `None` once every neighbour layer has been inserted.
    pub fn insert_next_layer(&mut self) -> Option<DegreeDelta<S>> {
        let n = self.ranking.len();
        if self.layers + 1 >= n.max(1) {
            return None;
        }
        let rank = self.layers;
        self.layers += 1;

        let old_volume = self.volume;
        let mut touched: Vec<(NodeId, S)> = Vec::new();
        let mut first_touch: HashMap<NodeId, usize> = HashMap::new();
        let mut added = S::zero();
        for i in 0..n {
            let neighbor = self.ranking.neighbors(i)[rank];
            let j = neighbor.index;
            let w = neighbor.similarity.max(S::zero());
            if w <= S::zero() || !self.edges.insert((i.min(j), i.max(j))) {
                continue;
            }
            for v in [i, j] {
                first_touch.entry(v).or_insert_with(|| {
                    touched.push((v, self.degrees[v]));
                    touched.len() - 1
                });
                self.degrees[v] = self.degrees[v] + w;
            }
            added = added + w + w;
        }
        self.volume = self.volume + added;
        let affected = touched
            .into_iter()
            .map(|(v, before)| (v, before, self.degrees[v]))
            .collect();
        Some(DegreeDelta {
            affected,
            old_volume,
            new_volume: self.volume,
        })
    }

    /// Materializes the current edge set as a graph.
    pub fn graph(&self) -> Result<WeightedGraph<S>> {
        WeightedGraph::from_edges(
            self.ranking.len(),
            self.edges
                .iter()
                .map(|&(i, j)| (i, j, self.ranking.weight(i, j))),
        )
    }
}

/// Picks the number of semantic neighbours by incremental 1D entropy minimization.
///
/// `k = 1` is evaluated from scratch; each later layer updates the entropy
/// from the degree changes alone. With [`StablePoint::First`] the search stops
/// at the first `k` whose predecessor is a strict local minimum, `k - 1`
/// being chosen; when none exists before `k = n - 1` the global minimum is used.
pub fn select_k<S: Scalar>(ranking: &NeighborRanking<S>, rule: StablePoint) -> Result<SeTrace<S>> {
    let n = ranking.len();
    if n < 3 {
        return Err(Error::Input(format!(
            "choosing k needs at least 3 messages, got {n}"
        )));
    }
    let mut builder = KnnGraphBuilder::new(ranking);
    if builder.insert_next_layer().is_none() {
        return Err(Error::Invariant("no first neighbour layer".into()));
    }
    let mut current: SeValue<S> = se_1d_of_degrees(builder.degrees(), builder.volume());
    let mut values = vec![current.value];

    while let Some(delta) = builder.insert_next_layer() {
        current = se_1d_update(current, &delta)?;
        values.push(current.value);
        let k = values.len();
        if rule == StablePoint::First && k >= 3 {
            let (before, mid, after) = (values[k - 3], values[k - 2], values[k - 1]);
            if mid < before && mid < after {
                return Ok(SeTrace {
                    values,
                    chosen_k: k - 1,
                    stable: true,
                });
            }
        }
    }

    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v < values[best] {
            best = i;
        }
    }
    let stable = rule == StablePoint::Global
        && best > 0
        && best + 1 < values.len();
    Ok(SeTrace {
        values,
        chosen_k: best + 1,
        stable,
    })
}

/// Which edge families make it into the message graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EdgeSources {
    pub attributes: bool,
    pub semantic: bool,
}

impl Default for EdgeSources {
    fn default() -> Self {
        EdgeSources {
            attributes: true,
            semantic: true,
        }
    }
}

/// The assembled message graph and the sizes of its two edge families.
#[derive(Debug, Clone)]
pub struct MessageGraph<S> {
    pub graph: WeightedGraph<S>,
    /// `|E_a|`, counted before weightless edges are dropped.
    pub attribute_edges: usize,
    /// `|E_s|`, counted before weightless edges are dropped.
    pub semantic_edges: usize,
}

/// Top-`k` neighbour pairs `(i, j)`, `i < j`, sorted.
pub fn semantic_edges<S: Scalar>(ranking: &NeighborRanking<S>, k: usize) -> Vec<(NodeId, NodeId)> {
    let mut edges: Vec<(NodeId, NodeId)> = (0..ranking.len())
        .flat_map(|i| {
            ranking.neighbors(i)[..k.min(ranking.neighbors(i).len())]
                .iter()
                .map(move |nb| (i.min(nb.index), i.max(nb.index)))
        })
        .collect();
    edges.sort_unstable();
    edges.dedup();
    edges
}

/// Unions attribute and semantic edges and weights each pair by `max(cos, 0)`.
pub fn build_message_graph<S: Scalar>(
    ranking: &NeighborRanking<S>,
    attribute: &[(NodeId, NodeId)],
    chosen_k: usize,
    sources: EdgeSources,
) -> Result<MessageGraph<S>> {
    if sources.semantic && chosen_k == 0 {
        return Err(Error::Input("the neighbour count k must be at least 1".into()));
    }
    let semantic = if sources.semantic {
        semantic_edges(ranking, chosen_k)
    } else {
        Vec::new()
    };
    let attribute: &[(NodeId, NodeId)] = if sources.attributes { attribute } else { &[] };
    let mut pairs: Vec<(NodeId, NodeId)> = attribute
        .iter()
        .map(|&(i, j)| (i.min(j), i.max(j)))
        .chain(semantic.iter().copied())
        .collect();
    pairs.sort_unstable();
    pairs.dedup();
    let graph = WeightedGraph::from_edges(
        ranking.len(),
        pairs.iter().map(|&(i, j)| (i, j, ranking.weight(i, j))),
    )?;
    Ok(MessageGraph {
        graph,
        attribute_edges: attribute.len(),
        semantic_edges: semantic.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn message(id: &str, attributes: &[&str], embedding: &[f64]) -> MessageRecord<f64> {
        MessageRecord {
            id: id.into(),
            attributes: attributes.iter().map(|s| s.to_string()).collect(),
            embedding: embedding.to_vec(),
        }
    }

    fn indices(ranking: &NeighborRanking<f64>, i: usize) -> Vec<usize> {
        ranking.neighbors(i).iter().map(|n| n.index).collect()
    }

    #[test]
    fn shared_hashtag_links_two_messages() {
        let corpus = [
            message("a", &["tag:#x", "user:a"], &[1.0]),
            message("b", &["tag:#x", "user:b"], &[1.0]),
        ];
        assert_eq!(attribute_edges(&corpus), vec![(0, 1)]);
    }

    #[test]
    fn shared_sender_forms_triangle() {
        let corpus = [
            message("a", &["user:u"], &[1.0]),
            message("b", &["user:u"], &[1.0]),
            message("c", &["user:u", "user:u"], &[1.0]),
        ];
        assert_eq!(attribute_edges(&corpus), vec![(0, 1), (0, 2), (1, 2)]);
    }

    #[test]
    fn disjoint_attributes_give_no_edges() {
        let corpus = [
            message("a", &["user:a"], &[1.0]),
            message("b", &["user:b"], &[1.0]),
            message("c", &[], &[1.0]),
        ];
        assert!(attribute_edges(&corpus).is_empty());
    }

    #[test]
    fn orthogonal_vs_parallel_ranking() {
        let corpus = [
            message("0", &[], &[1.0, 0.0]),
            message("1", &[], &[1.0, 0.0]),
            message("2", &[], &[0.0, 1.0]),
        ];
        let r = rank_neighbors(&corpus).unwrap();
        assert_eq!(indices(&r, 2), vec![0, 1]);
        assert_eq!(indices(&r, 0), vec![1, 2]);
        assert_eq!(r.neighbors(0)[0].similarity, 1.0);
    }

    #[test]
    fn identical_embeddings_rank_by_index() {
        let corpus = [
            message("0", &[], &[0.3, 0.4]),
            message("1", &[], &[0.3, 0.4]),
            message("2", &[], &[0.3, 0.4]),
        ];
        let r = rank_neighbors(&corpus).unwrap();
        assert_eq!(indices(&r, 0), vec![1, 2]);
        assert_eq!(indices(&r, 1), vec![0, 2]);
        assert_eq!(indices(&r, 2), vec![0, 1]);
    }

    #[test]
    fn zero_norm_embedding_is_rejected() {
        let corpus = [message("ok", &[], &[1.0, 0.0]), message("bad", &[], &[0.0, 0.0])];
        let err = rank_neighbors(&corpus).unwrap_err().to_string();
        assert!(err.contains("bad"), "{err}");
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let corpus = [message("a", &[], &[1.0, 0.0]), message("b", &[], &[1.0])];
        assert!(rank_neighbors(&corpus).is_err());
    }

    #[test]
    fn identical_embeddings_fall_back_to_argmin() {
        let corpus = [
            message("0", &[], &[1.0, 1.0]),
            message("1", &[], &[1.0, 1.0]),
            message("2", &[], &[1.0, 1.0]),
        ];
        let r = rank_neighbors(&corpus).unwrap();
        let trace = select_k(&r, StablePoint::First).unwrap();
        assert_eq!(trace.values.len(), 2);
        assert!(!trace.stable);
        // k=1 links 0-1 and 2-0: degrees (2, 1, 1); k=2 closes the triangle.
        assert!((trace.values[0] - 1.5).abs() < 1e-12);
        assert!((trace.values[1] - 3f64.log2()).abs() < 1e-12);
        assert_eq!(trace.chosen_k, 1);
    }

    #[test]
    fn select_k_needs_three_messages() {
        let corpus = [message("0", &[], &[1.0]), message("1", &[], &[1.0])];
        let r = rank_neighbors(&corpus).unwrap();
        assert!(select_k(&r, StablePoint::First).is_err());
    }

    #[test]
    fn union_keeps_one_edge_per_pair() {
        let corpus = [
            message("0", &["tag:#x"], &[1.0, 0.2]),
            message("1", &["tag:#x"], &[1.0, 0.0]),
            message("2", &[], &[0.0, 1.0]),
        ];
        let r = rank_neighbors(&corpus).unwrap();
        let ea = attribute_edges(&corpus);
        let mg = build_message_graph(&r, &ea, 1, EdgeSources::default()).unwrap();
        assert_eq!(mg.graph.weight(0, 1), Some(r.cosine(0, 1)));
        // Node 2's top neighbour is 0; 0 and 1 are each other's top neighbour.
        assert_eq!(mg.graph.edge_count(), 2);
    }

    #[test]
    fn negative_cosine_attribute_edge_is_dropped() {
        let corpus = [
            message("0", &["tag:#x"], &[1.0, 0.0]),
            message("1", &["tag:#x"], &[-0.2, 0.98]),
            message("2", &[], &[1.0, 0.1]),
        ];
        let r = rank_neighbors(&corpus).unwrap();
        assert!(r.cosine(0, 1) < 0.0);
        let ea = attribute_edges(&corpus);
        let only_attributes = EdgeSources {
            attributes: true,
            semantic: false,
        };
        let mg = build_message_graph(&r, &ea, 1, only_attributes).unwrap();
        assert_eq!(mg.attribute_edges, 1);
        assert_eq!(mg.graph.edge_count(), 0);
    }

    #[test]
    fn builder_layers_match_semantic_edges() {
        let corpus: Vec<_> = (0..6)
            .map(|i| {
                let t = i as f64;
                message(&i.to_string(), &[], &[t.cos(), t.sin(), 0.5])
            })
            .collect();
        let r = rank_neighbors(&corpus).unwrap();
        let mut builder = KnnGraphBuilder::new(&r);
        for k in 1..=5 {
            builder.insert_next_layer().unwrap();
            let g = builder.graph().unwrap();
            let expected: Vec<_> = semantic_edges(&r, k)
                .into_iter()
                .filter(|&(i, j)| r.weight(i, j) > 0.0)
                .collect();
            let got: Vec<_> = g.edges().map(|(i, j, _)| (i, j)).collect();
            assert_eq!(got, expected, "k = {k}");
        }
        assert!(builder.insert_next_layer().is_none());
    }
}
