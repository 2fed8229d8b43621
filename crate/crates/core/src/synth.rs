//! Planted-partition generators with known ground truth.

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::WeightedGraph;
use crate::knn::MessageRecord;

/// Shape of a synthetic event corpus.
///
/// Event centroids are orthonormal, so every pair of centroids is `√2` apart.
/// Each message is its centroid plus isotropic Gaussian noise whose expected
/// length is `noise_ratio × √2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorpusSpec {
    pub events: usize,
    pub messages_per_event: usize,
    /// Embedding dimension; raised to `events` if smaller.
    pub dim: usize,
    pub noise_ratio: f64,
    /// Size of each event's private attribute pool.
    pub attribute_pool: usize,
    /// Attributes drawn per message from its event's pool.
    pub attributes_per_message: usize,
    /// Chance that a drawn attribute comes from another event's pool instead.
    pub leak: f64,
    /// Fraction of messages that carry no event attributes at all.
    pub orphan_rate: f64,
    pub seed: u64,
}

impl Default for CorpusSpec {
    fn default() -> Self {
        CorpusSpec {
            events: 8,
            messages_per_event: 100,
            dim: 32,
            noise_ratio: 0.3,
            attribute_pool: 10,
            attributes_per_message: 3,
            leak: 0.05,
            orphan_rate: 0.0,
            seed: 7,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticCorpus {
    pub records: Vec<MessageRecord<f64>>,
    /// Planted event of each record.
    pub events: Vec<usize>,
}

pub fn planted_corpus(spec: &CorpusSpec) -> Result<SyntheticCorpus> {
    if spec.events == 0 || spec.messages_per_event == 0 {
        return Err(Error::Input(
            "a synthetic corpus needs at least one event with at least one message".into(),
        ));
    }
    if !(0.0..=1.0).contains(&spec.leak) || !(0.0..=1.0).contains(&spec.orphan_rate) {
        return Err(Error::Input("leak and orphan rate must lie in [0, 1]".into()));
    }
    if !(spec.noise_ratio >= 0.0) || !spec.noise_ratio.is_finite() {
        return Err(Error::Input(format!(
            "noise ratio must be a non-negative number, got {}",
            spec.noise_ratio
        )));
    }
    if spec.attributes_per_message > spec.attribute_pool {
        return Err(Error::Input(format!(
            "cannot draw {} distinct attributes from a pool of {}",
            spec.attributes_per_message, spec.attribute_pool
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let dim = spec.dim.max(spec.events);
    let sigma = spec.noise_ratio * std::f64::consts::SQRT_2 / (dim as f64).sqrt();
    let noise = Normal::new(0.0, sigma).map_err(|e| Error::Input(e.to_string()))?;

    let mut order: Vec<usize> = (0..spec.events)
        .flat_map(|e| std::iter::repeat_n(e, spec.messages_per_event))
        .collect();
    order.shuffle(&mut rng);

    let pool: Vec<usize> = (0..spec.attribute_pool).collect();
    let mut records = Vec::with_capacity(order.len());
    for (i, &event) in order.iter().enumerate() {
        let mut embedding: Vec<f64> = (0..dim).map(|_| noise.sample(&mut rng)).collect();
        embedding[event] += 1.0;
        if embedding.iter().all(|&x| x == 0.0) {
            embedding[event] = 1.0;
        }

        let mut attributes = vec![format!("user:u{i:05}")];
        if !rng.random_bool(spec.orphan_rate) {
            for &slot in pool.choose_multiple(&mut rng, spec.attributes_per_message) {
                let source = if spec.events > 1 && rng.random_bool(spec.leak) {
                    let other = rng.random_range(0..spec.events - 1);
                    if other >= event {
                        other + 1
                    } else {
                        other
                    }
                } else {
                    event
                };
                let attribute = format!("tag:#e{source}_{slot}");
                if !attributes.contains(&attribute) {
                    attributes.push(attribute);
                }
            }
        }
        records.push(MessageRecord {
            id: format!("m{i:05}"),
            attributes,
            embedding,
        });
    }
    Ok(SyntheticCorpus {
        records,
        events: order,
    })
}

/// Planted-partition random graph: `blocks` blocks of `block_size` nodes, an
/// edge of weight `weight` inside a block with probability `p_in` and across
/// blocks with probability `p_out`. Returns the graph and each node's block.
pub fn planted_graph(
    blocks: usize,
    block_size: usize,
    p_in: f64,
    p_out: f64,
    weight: f64,
    seed: u64,
) -> Result<(WeightedGraph<f64>, Vec<usize>)> {
    if !(0.0..=1.0).contains(&p_in) || !(0.0..=1.0).contains(&p_out) {
        return Err(Error::Input("edge probabilities must lie in [0, 1]".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let labels: Vec<usize> = (0..blocks)
        .flat_map(|b| std::iter::repeat_n(b, block_size))
        .collect();
    let n = labels.len();
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            let p = if labels[u] == labels[v] { p_in } else { p_out };
            if rng.random_bool(p) {
                edges.push((u, v, weight));
            }
        }
    }
    Ok((WeightedGraph::from_edges(n, edges)?, labels))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_under_seed() {
        let spec = CorpusSpec {
            events: 3,
            messages_per_event: 5,
            ..Default::default()
        };
        let a = planted_corpus(&spec).unwrap();
        let b = planted_corpus(&spec).unwrap();
        assert_eq!(a.records, b.records);
        assert_eq!(a.events, b.events);
        let c = planted_corpus(&CorpusSpec { seed: 8, ..spec }).unwrap();
        assert_ne!(a.records, c.records);
    }

    #[test]
    fn zero_events_is_an_error() {
        let spec = CorpusSpec {
            events: 0,
            ..Default::default()
        };
        assert!(planted_corpus(&spec).is_err());
    }

    #[test]
    fn zero_noise_puts_messages_on_centroids() {
        let spec = CorpusSpec {
            events: 4,
            messages_per_event: 3,
            noise_ratio: 0.0,
            leak: 0.0,
            ..Default::default()
        };
        let c = planted_corpus(&spec).unwrap();
        for (record, &event) in c.records.iter().zip(&c.events) {
            assert_eq!(record.embedding[event], 1.0);
            assert_eq!(record.embedding.iter().sum::<f64>(), 1.0);
            assert!(record.attributes[1..]
                .iter()
                .all(|a| a.starts_with(&format!("tag:#e{event}_"))));
        }
    }

    #[test]
    fn planted_graph_sizes() {
        let (g, labels) = planted_graph(4, 16, 0.9, 0.05, 1.0, 3).unwrap();
        assert_eq!(g.node_count(), 64);
        assert_eq!(labels.len(), 64);
        let (full, _) = planted_graph(2, 3, 1.0, 0.0, 1.0, 0).unwrap();
        assert_eq!(full.edge_count(), 6);
    }
}
