//! End-to-end runs: corpus in, events and a report out.

use std::path::PathBuf;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::PartitionFile;
use crate::knn::{
    attribute_edges, build_message_graph, rank_neighbors, select_k, EdgeSources, MessageRecord,
    SeTrace, StablePoint,
};
use crate::metrics::{agreement, Agreement, LabeledPartition};
use crate::minimize::{
    detect, greedy_2d_from_singletons, hierarchical_2d, CandidateScope, MinimizerConfig,
};
use crate::partition::Partition;
use crate::synth::{planted_corpus, CorpusSpec};
use crate::tree::two_level_tree;
use crate::{entropy, Graph};

/// Settings for one detection run. Loaded from a config file, then overridden by flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub subgraph_size: usize,
    pub max_n_doublings: usize,
    pub candidate_scope: CandidateScope,
    pub stable_point: StablePoint,
    pub attribute_edges: bool,
    pub semantic_edges: bool,
    /// Seed for the synthetic generators.
    pub seed: u64,
    pub output: Option<PathBuf>,
    pub report: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            subgraph_size: 300,
            max_n_doublings: 16,
            candidate_scope: CandidateScope::ConnectedPairs,
            stable_point: StablePoint::First,
            attribute_edges: true,
            semantic_edges: true,
            seed: 7,
            output: None,
            report: None,
        }
    }
}

impl RunConfig {
    pub fn minimizer(&self) -> MinimizerConfig {
        MinimizerConfig {
            subgraph_size: self.subgraph_size,
            max_n_doublings: self.max_n_doublings,
            candidate_scope: self.candidate_scope,
        }
    }

    pub fn edge_sources(&self) -> EdgeSources {
        EdgeSources {
            attributes: self.attribute_edges,
            semantic: self.semantic_edges,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.minimizer().validate()?;
        if !self.attribute_edges && !self.semantic_edges {
            return Err(Error::Input("at least one edge source must be enabled".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct StageTimings {
    pub ranking_ms: f64,
    pub select_k_ms: f64,
    pub graph_ms: f64,
    pub partition_ms: f64,
    pub total_ms: f64,
}

fn ms(d: Duration) -> f64 {
    d.as_secs_f64() * 1e3
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DetectReport {
    pub messages: usize,
    /// `None` when fewer than two messages or semantic edges are disabled.
    pub chosen_k: Option<usize>,
    /// Whether `chosen_k` came from a strict local minimum of the entropy trace.
    pub stable_point_found: bool,
    pub attribute_edges: usize,
    pub semantic_edges: usize,
    pub edges: usize,
    pub clusters: usize,
    pub final_se_2d: f64,
    pub rounds: usize,
    pub doublings: usize,
    pub doubling_cap_hit: bool,
    pub timings: StageTimings,
}

#[derive(Debug, Clone)]
pub struct DetectRun {
    pub graph: Graph,
    /// Events over record indices, canonical order.
    pub partition: Partition,
    pub report: DetectReport,
}

impl DetectRun {
    pub fn partition_file(&self, records: &[MessageRecord<f64>]) -> PartitionFile {
        let ids: Vec<String> = records.iter().map(|r| r.id.clone()).collect();
        PartitionFile::from_partition(&self.partition, &ids)
    }
}

/// Builds the message graph for `records` and detects events in it.
pub fn detect_corpus(records: &[MessageRecord<f64>], config: &RunConfig) -> Result<DetectRun> {
    config.validate()?;
    let start = Instant::now();
    let mut timings = StageTimings::default();
    let n = records.len();

    let ranking = rank_neighbors(records)?;
    timings.ranking_ms = ms(start.elapsed());

    let stage = Instant::now();
    let (chosen_k, stable) = if !config.semantic_edges || n < 2 {
        (None, false)
    } else if n == 2 {
        (Some(1), false)
    } else {
        let trace = select_k(&ranking, config.stable_point)?;
        (Some(trace.chosen_k), trace.stable)
    };
    timings.select_k_ms = ms(stage.elapsed());

    let stage = Instant::now();
    let attribute = attribute_edges(records);
    let message_graph = build_message_graph(
        &ranking,
        &attribute,
        chosen_k.unwrap_or(1),
        EdgeSources {
            attributes: config.attribute_edges,
            semantic: chosen_k.is_some(),
        },
    )?;
    timings.graph_ms = ms(stage.elapsed());

    let stage = Instant::now();
    let detection = detect(&message_graph.graph, &config.minimizer())?;
    timings.partition_ms = ms(stage.elapsed());
    timings.total_ms = ms(start.elapsed());

    let report = DetectReport {
        messages: n,
        chosen_k,
        stable_point_found: stable,
        attribute_edges: message_graph.attribute_edges,
        semantic_edges: message_graph.semantic_edges,
        edges: message_graph.graph.edge_count(),
        clusters: detection.partition.len(),
        final_se_2d: detection.se_2d,
        rounds: detection.rounds,
        doublings: detection.doublings,
        doubling_cap_hit: detection.capped,
        timings,
    };
    Ok(DetectRun {
        graph: message_graph.graph,
        partition: detection.partition,
        report,
    })
}

/// The entropy trace used to pick `k`.
pub fn knn_trace(records: &[MessageRecord<f64>], rule: StablePoint) -> Result<SeTrace<f64>> {
    let ranking = rank_neighbors(records)?;
    select_k(&ranking, rule)
}

/// Scores a predicted partition file against a ground-truth file over the same ids.
pub fn evaluate(pred: &PartitionFile, truth: &PartitionFile) -> Result<Agreement> {
    let ids = truth.ids();
    let mut pred_ids = pred.ids();
    let mut truth_ids = ids.clone();
    pred_ids.sort_unstable();
    truth_ids.sort_unstable();
    if pred_ids != truth_ids {
        let missing = truth_ids
            .iter()
            .find(|id| pred_ids.binary_search(id).is_err())
            .or_else(|| pred_ids.iter().find(|id| truth_ids.binary_search(id).is_err()));
        return Err(Error::Input(format!(
            "prediction and ground truth cover different ids ({} vs {}){}",
            pred_ids.len(),
            truth_ids.len(),
            missing.map_or_else(String::new, |id| format!(", e.g. '{id}'"))
        )));
    }
    let truth_partition = truth.to_partition(&ids)?;
    let pred_partition = pred.to_partition(&ids)?;
    Ok(agreement(&LabeledPartition::from_partitions(
        &pred_partition,
        &truth_partition,
    )?))
}

/// Planted corpus plus its ground truth as a partition file.
pub fn synthesize(spec: &CorpusSpec) -> Result<(Vec<MessageRecord<f64>>, PartitionFile)> {
    let corpus = planted_corpus(spec)?;
    let ids: Vec<String> = corpus.records.iter().map(|r| r.id.clone()).collect();
    let truth = Partition::from_labels(&corpus.events);
    let file = PartitionFile::from_partition(&truth, &ids);
    Ok((corpus.records, file))
}

/// One timing measurement.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    pub nodes: usize,
    pub edges: usize,
    /// `vanilla` or `hierarchical`.
    pub mode: &'static str,
    /// Batch size for hierarchical runs.
    pub subgraph_size: Option<usize>,
    pub scope: CandidateScope,
    pub seconds: f64,
    pub clusters: usize,
    pub se_2d: f64,
}

/// Message graph of a planted corpus with about 100 messages per event.
pub fn bench_graph(nodes: usize, seed: u64) -> Result<Graph> {
    if nodes < 3 {
        return Err(Error::Input(format!("bench graphs need at least 3 nodes, got {nodes}")));
    }
    let events = (nodes / 100).max(2);
    let spec = CorpusSpec {
        events,
        messages_per_event: nodes.div_ceil(events),
        seed,
        ..CorpusSpec::default()
    };
    let records = planted_corpus(&spec)?.records;
    let records = &records[..nodes];
    let ranking = rank_neighbors(records)?;
    let trace = select_k(&ranking, StablePoint::First)?;
    let graph = build_message_graph(
        &ranking,
        &attribute_edges(records),
        trace.chosen_k,
        EdgeSources::default(),
    )?
    .graph;
    Ok(graph)
}

fn entropy_of(graph: &Graph, partition: &Partition) -> Result<f64> {
    Ok(entropy::se_tree(graph, &two_level_tree(graph, partition)?)?.value)
}

/// Times vanilla greedy minimization against the hierarchical scheme for each
/// graph size and batch size.
pub fn bench(
    sizes: &[usize],
    subgraph_sizes: &[usize],
    scope: CandidateScope,
    include_vanilla: bool,
    seed: u64,
) -> Result<Vec<BenchRow>> {
    if sizes.is_empty() {
        return Err(Error::Input("no graph sizes to benchmark".into()));
    }
    if subgraph_sizes.is_empty() && !include_vanilla {
        return Err(Error::Input("nothing to benchmark".into()));
    }
    let mut rows = Vec::new();
    for &nodes in sizes {
        let graph = bench_graph(nodes, seed)?;
        if include_vanilla {
            let start = Instant::now();
            let outcome = greedy_2d_from_singletons(&graph, scope)?;
            let seconds = start.elapsed().as_secs_f64();
            rows.push(BenchRow {
                nodes,
                edges: graph.edge_count(),
                mode: "vanilla",
                subgraph_size: None,
                scope,
                seconds,
                clusters: outcome.partition.len(),
                se_2d: entropy_of(&graph, &outcome.partition)?,
            });
        }
        for &n in subgraph_sizes {
            let config = MinimizerConfig {
                subgraph_size: n,
                candidate_scope: scope,
                ..MinimizerConfig::default()
            };
            let start = Instant::now();
            let outcome = hierarchical_2d(&graph, &config)?;
            let seconds = start.elapsed().as_secs_f64();
            rows.push(BenchRow {
                nodes,
                edges: graph.edge_count(),
                mode: "hierarchical",
                subgraph_size: Some(n),
                scope,
                seconds,
                clusters: outcome.partition.len(),
                se_2d: entropy_of(&graph, &outcome.partition)?,
            });
        }
    }
    Ok(rows)
}
