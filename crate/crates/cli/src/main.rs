use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use secluster::io::{
    read_corpus, read_partition, write_corpus, write_corpus_with_sidecar, write_partition,
};
use secluster::knn::StablePoint;
use secluster::minimize::CandidateScope;
use secluster::pipeline::{bench, detect_corpus, evaluate, knn_trace, synthesize, BenchRow, RunConfig};
use secluster::synth::CorpusSpec;

#[derive(Parser)]
#[command(name = "secluster", version, about = "Event detection by structural entropy minimization")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the message graph for a corpus and partition it into events.
    Detect(DetectArgs),
    /// Score a predicted partition against ground truth (ARI, AMI, NMI).
    Eval(EvalArgs),
    /// Generate a planted-event corpus and its ground truth.
    Synth(SynthArgs),
    /// Time vanilla against hierarchical minimization and write CSV.
    Bench(BenchArgs),
    /// Dump the one-dimensional entropy trace over k as CSV.
    KnnTrace(TraceArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum ScopeArg {
    AllPairs,
    ConnectedPairs,
}

impl From<ScopeArg> for CandidateScope {
    fn from(s: ScopeArg) -> Self {
        match s {
            ScopeArg::AllPairs => CandidateScope::AllPairs,
            ScopeArg::ConnectedPairs => CandidateScope::ConnectedPairs,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum StableArg {
    First,
    Global,
}

impl From<StableArg> for StablePoint {
    fn from(s: StableArg) -> Self {
        match s {
            StableArg::First => StablePoint::First,
            StableArg::Global => StablePoint::Global,
        }
    }
}

#[derive(Args)]
struct CorpusArgs {
    /// JSON-lines corpus.
    #[arg(long)]
    corpus: PathBuf,
    /// Binary embedding file with one row per corpus record.
    #[arg(long)]
    embeddings: Option<PathBuf>,
}

#[derive(Args)]
struct DetectArgs {
    #[command(flatten)]
    input: CorpusArgs,
    /// TOML run configuration; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Partition output (stdout if absent).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Report output (stderr if absent).
    #[arg(long)]
    report: Option<PathBuf>,
    #[arg(long)]
    subgraph_size: Option<usize>,
    #[arg(long)]
    max_n_doublings: Option<usize>,
    #[arg(long, value_enum)]
    candidate_scope: Option<ScopeArg>,
    #[arg(long, value_enum)]
    stable_point: Option<StableArg>,
    /// Leave out common-attribute edges.
    #[arg(long)]
    no_attribute_edges: bool,
    /// Leave out semantic k-NN edges.
    #[arg(long)]
    no_semantic_edges: bool,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    pred: PathBuf,
    #[arg(long)]
    truth: PathBuf,
    /// Metrics output (stdout if absent).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SynthArgs {
    /// Corpus output.
    #[arg(long)]
    out: PathBuf,
    /// Ground-truth partition output.
    #[arg(long)]
    truth: PathBuf,
    /// Write embeddings to this binary file instead of inline.
    #[arg(long)]
    embeddings: Option<PathBuf>,
    /// TOML corpus spec; flags override it.
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long)]
    events: Option<usize>,
    #[arg(long)]
    messages_per_event: Option<usize>,
    #[arg(long)]
    dim: Option<usize>,
    /// Noise length as a fraction of the centroid distance.
    #[arg(long)]
    noise_ratio: Option<f64>,
    #[arg(long)]
    attribute_pool: Option<usize>,
    #[arg(long)]
    attributes_per_message: Option<usize>,
    #[arg(long)]
    leak: Option<f64>,
    #[arg(long)]
    orphan_rate: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct BenchArgs {
    /// Graph sizes in nodes.
    #[arg(long, value_delimiter = ',', required = true)]
    sizes: Vec<usize>,
    /// Sub-graph sizes for the hierarchical runs.
    #[arg(long = "n", value_delimiter = ',', default_value = "200,400")]
    subgraph_sizes: Vec<usize>,
    /// Skip the vanilla runs.
    #[arg(long)]
    no_vanilla: bool,
    #[arg(long, value_enum, default_value = "connected-pairs")]
    candidate_scope: ScopeArg,
    #[arg(long, default_value_t = 1)]
    repeats: usize,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// CSV output (stdout if absent).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TraceArgs {
    #[command(flatten)]
    input: CorpusArgs,
    #[arg(long, value_enum, default_value = "first")]
    stable_point: StableArg,
    /// CSV output (stdout if absent).
    #[arg(long)]
    out: Option<PathBuf>,
}

fn emit(path: Option<&Path>, bytes: &[u8], fallback: &mut dyn Write) -> anyhow::Result<()> {
    match path {
        Some(p) => fs::write(p, bytes).with_context(|| format!("cannot write {}", p.display())),
        None => fallback.write_all(bytes).context("cannot write output"),
    }
}

fn json_bytes<T: Serialize>(value: &T) -> anyhow::Result<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    Ok(bytes)
}

fn load_toml<T: serde::de::DeserializeOwned + Default>(path: Option<&Path>) -> anyhow::Result<T> {
    let Some(path) = path else {
        return Ok(T::default());
    };
    let text =
        fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    toml::from_str(&text).with_context(|| format!("invalid config {}", path.display()))
}

fn run_detect(args: DetectArgs) -> anyhow::Result<()> {
    let mut config: RunConfig = load_toml(args.config.as_deref())?;
    if let Some(n) = args.subgraph_size {
        config.subgraph_size = n;
    }
    if let Some(cap) = args.max_n_doublings {
        config.max_n_doublings = cap;
    }
    if let Some(scope) = args.candidate_scope {
        config.candidate_scope = scope.into();
    }
    if let Some(rule) = args.stable_point {
        config.stable_point = rule.into();
    }
    if args.no_attribute_edges {
        config.attribute_edges = false;
    }
    if args.no_semantic_edges {
        config.semantic_edges = false;
    }
    if args.out.is_some() {
        config.output = args.out;
    }
    if args.report.is_some() {
        config.report = args.report;
    }

    let records = read_corpus(&args.input.corpus, args.input.embeddings.as_deref())?;
    let run = detect_corpus(&records, &config)?;
    let file = run.partition_file(&records);
    match &config.output {
        Some(path) => write_partition(path, &file)?,
        None => std::io::stdout().write_all(&file.to_bytes())?,
    }
    emit(
        config.report.as_deref(),
        &json_bytes(&run.report)?,
        &mut std::io::stderr(),
    )
}

fn run_eval(args: EvalArgs) -> anyhow::Result<()> {
    let pred = read_partition(&args.pred)?;
    let truth = read_partition(&args.truth)?;
    let scores = evaluate(&pred, &truth)?;
    emit(args.out.as_deref(), &json_bytes(&scores)?, &mut std::io::stdout())
}

fn run_synth(args: SynthArgs) -> anyhow::Result<()> {
    let mut spec: CorpusSpec = load_toml(args.spec.as_deref())?;
    macro_rules! apply {
        ($($field:ident),*) => {$(
            if let Some(v) = args.$field {
                spec.$field = v;
            }
        )*};
    }
    apply!(
        events,
        messages_per_event,
        dim,
        noise_ratio,
        attribute_pool,
        attributes_per_message,
        leak,
        orphan_rate,
        seed
    );
    let (records, truth) = synthesize(&spec)?;
    match &args.embeddings {
        Some(sidecar) => write_corpus_with_sidecar(&args.out, sidecar, &records)?,
        None => write_corpus(&args.out, &records)?,
    }
    write_partition(&args.truth, &truth)?;
    Ok(())
}

fn run_bench(args: BenchArgs) -> anyhow::Result<()> {
    if args.repeats == 0 {
        bail!(secluster::Error::Input("repeats must be at least 1".into()));
    }
    let mut rows: Vec<BenchRow> = Vec::new();
    for _ in 0..args.repeats {
        rows.extend(bench(
            &args.sizes,
            &args.subgraph_sizes,
            args.candidate_scope.into(),
            !args.no_vanilla,
            args.seed,
        )?);
    }
    let mut writer = csv::Writer::from_writer(Vec::new());
    for row in &rows {
        writer.serialize(row)?;
    }
    let bytes = writer.into_inner().map_err(|e| anyhow::anyhow!(e.to_string()))?;
    emit(args.out.as_deref(), &bytes, &mut std::io::stdout())
}

#[derive(Serialize)]
struct TraceRow {
    k: usize,
    se_1d: f64,
    chosen: bool,
}

fn run_trace(args: TraceArgs) -> anyhow::Result<()> {
    let records = read_corpus(&args.input.corpus, args.input.embeddings.as_deref())?;
    let trace = knn_trace(&records, args.stable_point.into())?;
    let mut writer = csv::Writer::from_writer(Vec::new());
    for (i, &value) in trace.values.iter().enumerate() {
        writer.serialize(TraceRow {
            k: i + 1,
            se_1d: value,
            chosen: i + 1 == trace.chosen_k,
        })?;
    }
    let bytes = writer.into_inner().map_err(|e| anyhow::anyhow!(e.to_string()))?;
    emit(args.out.as_deref(), &bytes, &mut std::io::stdout())
}

fn main() -> ExitCode {
    // clap reports usage errors with status 2, which is reserved for invariant failures here.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match cli.command {
        Command::Detect(a) => run_detect(a),
        Command::Eval(a) => run_eval(a),
        Command::Synth(a) => run_synth(a),
        Command::Bench(a) => run_bench(a),
        Command::KnnTrace(a) => run_trace(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            let invariant = e
                .downcast_ref::<secluster::Error>()
                .is_some_and(|e| !e.is_input_error());
            ExitCode::from(if invariant { 2 } else { 1 })
        }
    }
}
