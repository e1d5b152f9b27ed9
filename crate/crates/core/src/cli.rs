//! The `newsrank` command line.
//!
//! Subcommands: `synth` (write a synthetic corpus), `validate` (lint a
//! corpus), `run` (run an evaluation protocol), `train` (fit and save a
//! model bundle) and `rank` (score one snapshot with a saved bundle).
//! `NEWSRANK_SEED` overrides the seed of a config file; an explicit
//! `--seed` wins over both. Exit codes: 0 success, 1 runtime failure,
//! 2 usage or configuration error.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::corpus::{count_window, generate_synthetic, load_corpus, write_corpus, Corpus, GenParams};
use crate::error::Error;
use crate::features::{build_vocabulary, featurize, Lexicon};
use crate::harness::{run_protocol_with, write_report, ProtocolKind, ProtocolSpec};
use crate::learners::{fit, ForestParams, LearnerKind, LearnerSpec};
use crate::ranking::{build_pool, ground_truth_rank, predicted_rank, ModelBundle, PredictMode};
use crate::relevance::{build_relevance, RelevanceConfig};
use crate::resample::{resample, ResampleParams, Strategy};
use crate::VERSION;

pub const SEED_ENV: &str = "NEWSRANK_SEED";

#[derive(Debug, Parser)]
#[command(name = "newsrank", version, about = "News popularity prediction and ranking experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a synthetic catalog and snapshot file.
    Synth(SynthArgs),
    /// Check a corpus and print its summary.
    Validate(CorpusArgs),
    /// Run an evaluation protocol and write its report.
    Run(RunArgs),
    /// Fit a model on the items whose counts are complete at a time.
    Train(TrainArgs),
    /// Rank one snapshot with a saved model next to the ground truth.
    Rank(RankArgs),
}

#[derive(Debug, Args)]
struct CorpusArgs {
    /// Catalog JSON-lines file; its stem is the topic label.
    #[arg(long)]
    catalog: PathBuf,
    /// Snapshot JSON-lines file.
    #[arg(long)]
    snapshots: PathBuf,
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = 5000)]
    items: usize,
    #[arg(long, default_value_t = 96)]
    slices: usize,
    /// Generator parameters as JSON; unspecified fields keep their defaults.
    #[arg(long)]
    params: Option<PathBuf>,
    #[arg(long, default_value = "synthetic")]
    topic: String,
    /// Output directory for `<topic>.jsonl` and `<topic>.snapshots.jsonl`.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct RunArgs {
    #[command(flatten)]
    corpus: CorpusArgs,
    /// pred-eval, standalone-rank, realworld-rank or augmentation.
    #[arg(long)]
    protocol: String,
    /// Full protocol spec as JSON; flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Learners, comma separated (lm, rf).
    #[arg(long, value_delimiter = ',')]
    learner: Vec<String>,
    /// Resampling strategies, comma separated (none, under, smoter).
    #[arg(long, value_delimiter = ',')]
    resample: Vec<String>,
    #[arg(long)]
    reps: Option<usize>,
    /// Trees per random forest.
    #[arg(long)]
    trees: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Word,polarity CSV replacing the bundled lexicon.
    #[arg(long)]
    lexicon: Option<PathBuf>,
    #[arg(long, default_value = "report")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[command(flatten)]
    corpus: CorpusArgs,
    /// Train on items whose two-day count is complete at this time
    /// (RFC 3339); defaults to the last snapshot.
    #[arg(long)]
    until: Option<DateTime<Utc>>,
    #[arg(long, default_value = "rf")]
    learner: String,
    #[arg(long, default_value = "under")]
    resample: String,
    #[arg(long)]
    trees: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    lexicon: Option<PathBuf>,
    #[arg(long, default_value = "model.json")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct RankArgs {
    #[command(flatten)]
    corpus: CorpusArgs,
    /// Model bundle written by `train`.
    #[arg(long)]
    model: PathBuf,
    /// Snapshot timestamp (RFC 3339).
    #[arg(long)]
    at: DateTime<Utc>,
    /// CSV destination; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Configuration echoed next to every `run` report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub version: String,
    pub command: String,
    pub catalog: PathBuf,
    pub snapshots: PathBuf,
    pub topic: String,
    pub lexicon: Option<PathBuf>,
    pub seed: u64,
    pub protocol: ProtocolSpec,
    pub out: PathBuf,
}

/// A failure with the exit code it maps to.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    fn usage(e: impl std::fmt::Display) -> Self {
        Self { code: 2, message: e.to_string() }
    }

    fn runtime(e: impl std::fmt::Display) -> Self {
        Self { code: 1, message: e.to_string() }
    }
}

type Outcome<T> = std::result::Result<T, Failure>;

trait Stage<T> {
    /// Configuration and input problems: exit code 2.
    fn usage(self) -> Outcome<T>;
    /// Failures while doing the work: exit code 1.
    fn runtime(self) -> Outcome<T>;
}

impl<T, E: std::fmt::Display> Stage<T> for std::result::Result<T, E> {
    fn usage(self) -> Outcome<T> {
        self.map_err(Failure::usage)
    }

    fn runtime(self) -> Outcome<T> {
        self.map_err(Failure::runtime)
    }
}

/// Entry point of the binary: parses the process arguments and returns the exit code.
pub fn main() -> i32 {
    let seed_env = std::env::var(SEED_ENV).ok();
    run(std::env::args_os(), seed_env.as_deref(), &mut std::io::stdout(), &mut std::io::stderr())
}

/// Runs one invocation. `seed_env` stands in for `NEWSRANK_SEED`.
pub fn run<I, T>(args: I, seed_env: Option<&str>, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = if code == 0 { write!(out, "{e}") } else { write!(err, "{e}") };
            return code;
        }
    };
    let result = parse_seed_env(seed_env).and_then(|env_seed| match cli.command {
        Command::Synth(a) => cmd_synth(a, env_seed, out),
        Command::Validate(a) => cmd_validate(a, out),
        Command::Run(a) => cmd_run(a, env_seed, out),
        Command::Train(a) => cmd_train(a, env_seed, out),
        Command::Rank(a) => cmd_rank(a, out),
    });
    match result {
        Ok(()) => 0,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}

fn parse_seed_env(v: Option<&str>) -> Outcome<Option<u64>> {
    v.map(|s| s.trim().parse::<u64>().map_err(|_| Failure::usage(format!("{SEED_ENV}={s:?} is not an unsigned integer"))))
        .transpose()
}

fn load(c: &CorpusArgs) -> Outcome<Corpus> {
    load_corpus(&c.catalog, &c.snapshots).usage()
}

fn load_lexicon(path: &Option<PathBuf>) -> Outcome<Lexicon> {
    match path {
        Some(p) => Lexicon::load(p).usage(),
        None => Ok(Lexicon::default_english()),
    }
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Outcome<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
}

fn cmd_synth(a: SynthArgs, env_seed: Option<u64>, out: &mut dyn Write) -> Outcome<()> {
    if a.items == 0 || a.slices == 0 {
        return Err(Failure::usage("--items and --slices must be positive"));
    }
    let params: GenParams = match &a.params {
        Some(p) => read_json(p)?,
        None => GenParams::default(),
    };
    params.validate().usage()?;
    let seed = a.seed.or(env_seed).unwrap_or(0);
    let corpus = generate_synthetic(seed, a.items, a.slices, &params).usage()?;
    std::fs::create_dir_all(&a.out).map_err(|e| Failure::runtime(format!("{}: {e}", a.out.display())))?;
    let catalog = a.out.join(format!("{}.jsonl", a.topic));
    let snapshots = a.out.join(format!("{}.snapshots.jsonl", a.topic));
    write_corpus(&corpus, &catalog, &snapshots).map_err(|e| Failure::runtime(format!("{}: {e}", a.out.display())))?;

    let counts: Vec<f64> = corpus.items().iter().filter_map(|i| i.n_tweets_2d).map(|c| c as f64).collect();
    let rare = build_relevance(&counts)
        .map(|rel| counts.iter().filter(|&&y| rel.is_rare(y)).count() as f64 / counts.len() as f64)
        .ok();
    writeln!(out, "seed: {seed}").runtime()?;
    writeln!(out, "items: {}", corpus.items().len()).runtime()?;
    writeln!(out, "snapshots: {}", corpus.snapshots().len()).runtime()?;
    match rare {
        Some(r) => writeln!(out, "rare fraction: {r:.4}").runtime()?,
        None => writeln!(out, "rare fraction: undefined").runtime()?,
    }
    writeln!(out, "catalog: {}", catalog.display()).runtime()?;
    writeln!(out, "snapshots file: {}", snapshots.display()).runtime()?;
    Ok(())
}

fn cmd_validate(a: CorpusArgs, out: &mut dyn Write) -> Outcome<()> {
    let corpus = load(&a)?;
    let summary = serde_json::to_string_pretty(&corpus.summary()).runtime()?;
    writeln!(out, "{summary}").runtime()
}

fn learner_spec(name: &str, trees: Option<usize>) -> Outcome<LearnerSpec> {
    let mut spec: LearnerSpec = name.parse().usage()?;
    if let (LearnerKind::RandomForest(p), Some(n)) = (&mut spec.kind, trees) {
        *p = ForestParams { n_trees: n, ..p.clone() };
    }
    Ok(spec)
}

fn protocol_spec(a: &RunArgs, env_seed: Option<u64>) -> Outcome<ProtocolSpec> {
    let kind: ProtocolKind = a.protocol.parse().usage()?;
    let mut spec = match &a.config {
        Some(path) => {
            let spec: ProtocolSpec = read_json(path)?;
            if spec.kind != kind {
                return Err(Failure::usage(format!(
                    "--protocol {kind} does not match the config's {}",
                    spec.kind
                )));
            }
            spec
        }
        None => ProtocolSpec::new(kind, 0),
    };
    if let Some(s) = a.seed.or(env_seed) {
        spec.seed = s;
    }
    if let Some(r) = a.reps {
        spec.reps = r;
    }
    if !a.learner.is_empty() {
        spec.learners = a.learner.iter().map(|l| learner_spec(l, a.trees)).collect::<Outcome<_>>()?;
    } else if let Some(n) = a.trees {
        for l in &mut spec.learners {
            if let LearnerKind::RandomForest(p) = &mut l.kind {
                p.n_trees = n;
            }
        }
    }
    if !a.resample.is_empty() {
        let strategies = a.resample.iter().map(|s| s.parse::<Strategy>()).collect::<Result<Vec<_>, _>>().usage()?;
        spec = spec.with_strategies(&strategies);
    }
    spec.validate().usage()?;
    Ok(spec)
}

fn cmd_run(a: RunArgs, env_seed: Option<u64>, out: &mut dyn Write) -> Outcome<()> {
    let spec = protocol_spec(&a, env_seed)?;
    let lexicon = load_lexicon(&a.lexicon)?;
    let corpus = load(&a.corpus)?;
    let config = RunConfig {
        version: VERSION.to_string(),
        command: "run".into(),
        catalog: a.corpus.catalog.clone(),
        snapshots: a.corpus.snapshots.clone(),
        topic: corpus.topic().to_string(),
        lexicon: a.lexicon.clone(),
        seed: spec.seed,
        protocol: spec.clone(),
        out: a.out.clone(),
    };
    let report = run_protocol_with(&corpus, &spec, &lexicon).map_err(|e| match e {
        Error::WindowTooLarge { .. } | Error::InvalidParams(_) => Failure::usage(e),
        other => Failure::runtime(other),
    })?;
    let files = write_report(&report, &a.out).runtime()?;
    let echo = serde_json::to_string_pretty(&config).runtime()? + "\n";
    std::fs::write(a.out.join("config.json"), echo).runtime()?;

    writeln!(out, "{} on {} ({} windows, seed {})", spec.kind, corpus.topic(), report.windows.len(), spec.seed).runtime()?;
    let summary = std::fs::read_to_string(&files.summary_csv).runtime()?;
    for line in summary.lines().filter(|l| !l.starts_with('#')) {
        writeln!(out, "{line}").runtime()?;
    }
    writeln!(out, "report: {}", files.json.display()).runtime()?;
    if let Some(s) = files.slices_csv {
        writeln!(out, "per-slice F1: {}", s.display()).runtime()?;
    }
    Ok(())
}

fn cmd_train(a: TrainArgs, env_seed: Option<u64>, out: &mut dyn Write) -> Outcome<()> {
    let seed = a.seed.or(env_seed).unwrap_or(0);
    let learner = learner_spec(&a.learner, a.trees)?.with_seed(seed);
    let mut params = ResampleParams::new(a.resample.parse().usage()?);
    params.seed = seed;
    learner.validate().usage()?;
    let lexicon = load_lexicon(&a.lexicon)?;
    let corpus = load(&a.corpus)?;
    let until = match a.until.or_else(|| corpus.snapshots().last().map(|s| s.ts)) {
        Some(t) => t,
        None => return Err(Failure::usage("corpus has no snapshots; pass --until")),
    };
    let items: Vec<_> = corpus
        .known_items_by_time()
        .into_iter()
        .filter(|it| it.pub_ts + count_window() <= until)
        .collect();
    if items.is_empty() {
        return Err(Failure::usage(format!("no item has a complete count at {until}")));
    }
    let vocabulary = build_vocabulary(items.iter().copied(), crate::features::DEFAULT_MAX_TERMS).runtime()?;
    let train = featurize(items.iter().copied(), &vocabulary, &lexicon).runtime()?;
    let rel = RelevanceConfig::default().build(train.y()).runtime()?;
    let data = resample(&train, &rel, &params).runtime()?;
    let model = fit(&learner, &data).runtime()?;
    let bundle = ModelBundle { vocabulary, lexicon, model };
    bundle.save(&a.out).runtime()?;
    writeln!(
        out,
        "trained {}{} on {} items ({} rows after resampling), seed {seed}: {}",
        learner.label(),
        params.strategy.label().to_ascii_uppercase(),
        items.len(),
        data.len(),
        a.out.display()
    )
    .runtime()
}

fn cmd_rank(a: RankArgs, out: &mut dyn Write) -> Outcome<()> {
    if !a.model.exists() {
        return Err(Failure::usage(format!("model file {} does not exist", a.model.display())));
    }
    let bundle = ModelBundle::load(&a.model).usage()?;
    let corpus = load(&a.corpus)?;
    let Some(snapshot) = corpus.snapshot_at(a.at) else {
        let near: Vec<String> = corpus.nearest_snapshot_times(a.at, 3).iter().map(|t| t.to_rfc3339()).collect();
        return Err(Failure::usage(format!(
            "no snapshot at {}; nearest: {}",
            a.at.to_rfc3339(),
            if near.is_empty() { "none".to_string() } else { near.join(", ") }
        )));
    };
    let full = build_pool(snapshot, &corpus, snapshot.ts).runtime()?;
    let pool = full.known_only(&corpus);
    let truth = ground_truth_rank(&pool, &corpus).runtime()?;
    let pred = predicted_rank(&pool, &corpus, &bundle, PredictMode::Hybrid).runtime()?;
    let pred_pos = pred.positions();

    let mut buf = Vec::new();
    writeln!(buf, "# version: {VERSION}").runtime()?;
    writeln!(buf, "# model: {}", a.model.display()).runtime()?;
    writeln!(buf, "# learner: {}", serde_json::to_string(bundle.model.spec()).runtime()?).runtime()?;
    writeln!(buf, "# snapshot: {}", snapshot.ts.to_rfc3339()).runtime()?;
    writeln!(buf, "# dropped_unknown: {}", full.len() - pool.len()).runtime()?;
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        w.write_record(["id", "GroundTruthRank", "RealNTweets", "PR.rankPosition", "Pred.NTweets"]).runtime()?;
        for (i, e) in truth.entries().iter().enumerate() {
            let p = pred_pos[e.id.as_str()];
            let score = pred.entries()[p - 1].score;
            w.write_record([e.id.clone(), (i + 1).to_string(), e.score.to_string(), p.to_string(), format!("{score:.2}")])
                .runtime()?;
        }
        w.flush().runtime()?;
    }
    match &a.out {
        Some(path) => std::fs::write(path, &buf).runtime(),
        None => out.write_all(&buf).runtime(),
    }
}
