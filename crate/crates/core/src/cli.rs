//! Command-line front end. Every subcommand writes its artifacts and one
//! `manifest.json` into `--out`.
//!
//! Settings resolve as flag, then `--config` TOML file, then built-in default.
//! Global flags also read `DIACHRON_SEED`, `DIACHRON_THREADS` and
//! `DIACHRON_CONFIG`.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::{
    self, build_vocabulary, corpus_stats, ingest, slice_by_year, stats_csv, vectorize_all, BowDocument, DateMode,
    PreprocessConfig, VocabConfig, Vocabulary,
};
use crate::diagnostics::{self, OnsetSpec};
use crate::dtm::{self, DtmConfig, DtmModel};
use crate::error::{Error, Result};
use crate::inference::{self, FoldInConfig};
use crate::lda::{self, LdaConfig, LdaModel};
use crate::prominence;
use crate::sampler::{self, SamplePlan, SampleUnit};
use crate::synthgen::{self, ScenarioSpec};

#[derive(Debug, Parser)]
#[command(name = "diachron", version, about = "Topic models for imbalanced diachronic corpora")]
struct Cli {
    /// Seed for every random stream of the run.
    #[arg(long, global = true, env = "DIACHRON_SEED")]
    seed: Option<u64>,
    /// Worker threads; 1 gives the reference deterministic mode.
    #[arg(long, global = true, env = "DIACHRON_THREADS")]
    threads: Option<usize>,
    /// TOML file with default settings, overridden by flags.
    #[arg(long, global = true, env = "DIACHRON_CONFIG")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Tokenize records, build the vocabulary and write bag-of-words documents.
    Ingest(IngestArgs),
    /// Per-year token and article counts of a record file.
    Stats(StatsArgs),
    /// Per-year balanced training subset.
    Sample(SampleArgs),
    /// Train LDA by collapsed Gibbs sampling.
    TrainLda(TrainLdaArgs),
    /// Train a dynamic topic model.
    TrainDtm(TrainDtmArgs),
    /// Infer document topic proportions with a trained model.
    Infer(InferArgs),
    /// Per-year topic prominence, cluster sums and trends.
    Prominence(ProminenceArgs),
    /// Term-saliency heatmap of one DTM topic.
    Heatmap(HeatmapArgs),
    /// Drift and stretching scores of one DTM topic.
    Stretch(StretchArgs),
    /// Candidate pairs between LDA and DTM topics.
    Match(MatchArgs),
    /// Generate a synthetic corpus with planted dynamics.
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
struct OutArg {
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct IngestArgs {
    /// Line-delimited JSON records with id, date and text or tokens.
    #[arg(long)]
    input: PathBuf,
    #[command(flatten)]
    out: OutArg,
    #[arg(long)]
    min_token_len: Option<usize>,
    /// Stopword file, one word per line.
    #[arg(long)]
    stopwords: Option<PathBuf>,
    /// Also accept MM/YYYY, DD/MM/YYYY and DD.MM.YYYY dates.
    #[arg(long)]
    lenient_dates: bool,
    #[arg(long)]
    min_year: Option<i32>,
    #[arg(long)]
    max_year: Option<i32>,
    #[arg(long)]
    min_df: Option<u64>,
    #[arg(long)]
    max_df_ratio: Option<f64>,
    #[arg(long)]
    max_vocab: Option<usize>,
}

#[derive(Debug, Args)]
struct StatsArgs {
    #[arg(long)]
    input: PathBuf,
    #[command(flatten)]
    out: OutArg,
    #[arg(long)]
    lenient_dates: bool,
}

#[derive(Debug, Args)]
struct SampleArgs {
    /// Bag-of-words file written by `ingest`.
    #[arg(long)]
    bow: PathBuf,
    #[command(flatten)]
    out: OutArg,
    /// Per-year budget in the chosen unit.
    #[arg(long)]
    budget: Option<u64>,
    #[arg(long, value_enum)]
    unit: Option<UnitArg>,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum UnitArg {
    Tokens,
    Articles,
}

#[derive(Debug, Args)]
struct LdaFlags {
    #[arg(long)]
    topics: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    burn_in: Option<usize>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    thin: Option<usize>,
    /// Document partitions for approximate distributed sweeps.
    #[arg(long)]
    partitions: Option<usize>,
}

#[derive(Debug, Args)]
struct TrainLdaArgs {
    #[arg(long)]
    bow: PathBuf,
    #[arg(long)]
    vocab: PathBuf,
    #[command(flatten)]
    out: OutArg,
    #[command(flatten)]
    lda: LdaFlags,
}

#[derive(Debug, Args)]
struct TrainDtmArgs {
    #[arg(long)]
    bow: PathBuf,
    #[arg(long)]
    vocab: PathBuf,
    #[command(flatten)]
    out: OutArg,
    #[arg(long)]
    topics: Option<usize>,
    /// Random-walk variance of the topic chains.
    #[arg(long)]
    chain_variance: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    /// Outer variational iterations.
    #[arg(long)]
    iters: Option<usize>,
    /// Slice width in years.
    #[arg(long)]
    granularity: Option<u32>,
    /// Burn-in sweeps of the pooled LDA initializer.
    #[arg(long)]
    init_burn_in: Option<usize>,
    /// Post-burn-in sweeps of the pooled LDA initializer.
    #[arg(long)]
    init_samples: Option<usize>,
}

#[derive(Debug, Args)]
struct InferArgs {
    /// LDA or DTM model bundle.
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    bow: PathBuf,
    #[arg(long)]
    vocab: PathBuf,
    #[command(flatten)]
    out: OutArg,
    #[arg(long)]
    burn_in: Option<usize>,
    #[arg(long)]
    samples: Option<usize>,
}

#[derive(Debug, Args)]
struct ProminenceArgs {
    /// Theta CSV written by `infer`.
    #[arg(long)]
    thetas: PathBuf,
    #[command(flatten)]
    out: OutArg,
    /// Cluster file with `name: i, j` lines.
    #[arg(long)]
    clusters: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct TopicArgs {
    /// DTM model bundle.
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    vocab: PathBuf,
    #[arg(long)]
    topic: usize,
    #[arg(long)]
    top_n: Option<usize>,
}

#[derive(Debug, Args)]
struct HeatmapArgs {
    #[command(flatten)]
    topic: TopicArgs,
    #[command(flatten)]
    out: OutArg,
    /// Relevance weight for word selection.
    #[arg(long)]
    lambda: Option<f64>,
    /// Also write an SVG rendering.
    #[arg(long)]
    svg: bool,
}

#[derive(Debug, Args)]
struct StretchArgs {
    #[command(flatten)]
    topic: TopicArgs,
    #[command(flatten)]
    out: OutArg,
    /// Comma-separated words expected to be absent before the onset slice.
    #[arg(long, requires = "onset_slice", value_delimiter = ',')]
    onset_words: Vec<String>,
    /// Label of the onset slice, e.g. 1860.
    #[arg(long, requires = "onset_words")]
    onset_slice: Option<String>,
}

#[derive(Debug, Args)]
struct MatchArgs {
    #[arg(long)]
    lda: PathBuf,
    #[arg(long)]
    dtm: PathBuf,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum Preset {
    Constant,
    Trend,
    Onset,
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[command(flatten)]
    out: OutArg,
    /// TOML scenario file; replaces the preset.
    #[arg(long, conflicts_with = "preset")]
    scenario: Option<PathBuf>,
    #[arg(long, value_enum)]
    preset: Option<Preset>,
    #[arg(long)]
    slices: Option<usize>,
    #[arg(long)]
    topics: Option<usize>,
    #[arg(long)]
    vocab_size: Option<usize>,
    #[arg(long)]
    docs_per_slice: Option<usize>,
    #[arg(long)]
    tokens_per_doc: Option<usize>,
}

/// Optional settings read from `--config`.
#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct Settings {
    seed: Option<u64>,
    threads: Option<usize>,
    preprocess: PreprocessSettings,
    vocab: VocabSettings,
    sample: SampleSettings,
    lda: LdaSettings,
    dtm: DtmSettings,
    infer: InferSettings,
    diagnostics: DiagnosticSettings,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct PreprocessSettings {
    min_token_len: Option<usize>,
    stopwords: Option<PathBuf>,
    lenient_dates: Option<bool>,
    min_year: Option<i32>,
    max_year: Option<i32>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct VocabSettings {
    min_df: Option<u64>,
    max_df_ratio: Option<f64>,
    max_size: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct SampleSettings {
    budget: Option<u64>,
    unit: Option<UnitArg>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct LdaSettings {
    topics: Option<usize>,
    alpha: Option<f64>,
    beta: Option<f64>,
    burn_in: Option<usize>,
    samples: Option<usize>,
    thin: Option<usize>,
    partitions: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct DtmSettings {
    topics: Option<usize>,
    chain_variance: Option<f64>,
    alpha: Option<f64>,
    iters: Option<usize>,
    granularity: Option<u32>,
    init_burn_in: Option<usize>,
    init_samples: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct InferSettings {
    burn_in: Option<usize>,
    samples: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct DiagnosticSettings {
    top_n: Option<usize>,
    lambda: Option<f64>,
}

/// Provenance record written next to every set of artifacts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config: serde_json::Value,
    /// Input path to SHA-256 of its bytes.
    pub inputs: BTreeMap<String, String>,
    pub seed: u64,
    pub threads: Option<usize>,
    pub version: String,
    pub started_unix: u64,
    pub wall_clock_secs: f64,
}

impl RunManifest {
    pub const FILE: &'static str = "manifest.json";

    pub fn read(dir: &Path) -> Result<Self> {
        let path = dir.join(Self::FILE);
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::parse(&path, 0, e.to_string()))
    }
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(Sha256::digest(&bytes).iter().fold(String::with_capacity(64), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    }))
}

struct Run {
    command: &'static str,
    seed: u64,
    threads: Option<usize>,
    out: PathBuf,
    inputs: Vec<PathBuf>,
    config: serde_json::Value,
    started: Instant,
    started_unix: u64,
}

impl Run {
    fn new(command: &'static str, global: &Global, out: &Path) -> Result<Self> {
        fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
        Ok(Run {
            command,
            seed: global.seed,
            threads: global.threads,
            out: out.to_path_buf(),
            inputs: Vec::new(),
            config: serde_json::Value::Null,
            started: Instant::now(),
            started_unix: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
        })
    }

    fn input(&mut self, path: &Path) -> PathBuf {
        self.inputs.push(path.to_path_buf());
        path.to_path_buf()
    }

    fn config(&mut self, value: serde_json::Value) {
        self.config = value;
    }

    fn write(&self, name: &str, body: &str) -> Result<PathBuf> {
        let path = self.out.join(name);
        fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
        Ok(path)
    }

    fn finish(self) -> Result<()> {
        let mut inputs = BTreeMap::new();
        for p in &self.inputs {
            inputs.insert(p.display().to_string(), sha256_file(p)?);
        }
        let manifest = RunManifest {
            command: self.command.to_string(),
            config: self.config,
            inputs,
            seed: self.seed,
            threads: self.threads,
            version: env!("CARGO_PKG_VERSION").to_string(),
            started_unix: self.started_unix,
            wall_clock_secs: self.started.elapsed().as_secs_f64(),
        };
        let body = serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n";
        let path = self.out.join(RunManifest::FILE);
        fs::write(&path, body).map_err(|e| Error::io(&path, e))
    }
}

struct Global {
    seed: u64,
    threads: Option<usize>,
    settings: Settings,
}

/// Parses `args` (including the program name), runs the subcommand and
/// returns the process exit code: 0 on success, 2 on usage errors, 1 on
/// runtime errors.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            2
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e}");
            1
        }
    }
}

enum Failure {
    Usage(String),
    Runtime(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Runtime(e)
    }
}

fn execute(cli: Cli) -> std::result::Result<(), Failure> {
    let settings = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            toml::from_str::<Settings>(&text)
                .map_err(|e| Failure::Usage(format!("config {}: {}", path.display(), e.message())))?
        }
        None => Settings::default(),
    };
    let global = Global {
        seed: cli.seed.or(settings.seed).unwrap_or(0),
        threads: cli.threads.or(settings.threads),
        settings,
    };
    if global.threads == Some(0) {
        return Err(Failure::Usage("--threads must be at least 1".into()));
    }
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = global.threads {
        pool = pool.num_threads(n);
    }
    let pool = pool
        .build()
        .map_err(|e| Failure::Runtime(Error::Config(format!("thread pool: {e}"))))?;
    pool.install(|| dispatch(cli.command, &global))
}

fn dispatch(command: Command, g: &Global) -> std::result::Result<(), Failure> {
    match command {
        Command::Ingest(a) => cmd_ingest(a, g),
        Command::Stats(a) => cmd_stats(a, g),
        Command::Sample(a) => cmd_sample(a, g),
        Command::TrainLda(a) => cmd_train_lda(a, g),
        Command::TrainDtm(a) => cmd_train_dtm(a, g),
        Command::Infer(a) => cmd_infer(a, g),
        Command::Prominence(a) => cmd_prominence(a, g),
        Command::Heatmap(a) => cmd_heatmap(a, g),
        Command::Stretch(a) => cmd_stretch(a, g),
        Command::Match(a) => cmd_match(a, g),
        Command::Synth(a) => cmd_synth(a, g),
    }
}

type CmdResult = std::result::Result<(), Failure>;

fn cmd_ingest(a: IngestArgs, g: &Global) -> CmdResult {
    let s = &g.settings;
    let mut run = Run::new("ingest", g, &a.out.out)?;
    let mut pre = PreprocessConfig {
        min_token_len: a.min_token_len.or(s.preprocess.min_token_len).unwrap_or(2),
        date_mode: if a.lenient_dates || s.preprocess.lenient_dates.unwrap_or(false) {
            DateMode::Lenient
        } else {
            DateMode::StrictIso
        },
        ..Default::default()
    };
    let min_year = a.min_year.or(s.preprocess.min_year);
    let max_year = a.max_year.or(s.preprocess.max_year);
    if min_year.is_some() || max_year.is_some() {
        pre.year_range = Some((min_year.unwrap_or(i32::MIN), max_year.unwrap_or(i32::MAX)));
    }
    let stopwords = a.stopwords.or(s.preprocess.stopwords.clone());
    if let Some(p) = &stopwords {
        pre.load_stopwords(&run.input(p))?;
    }
    let defaults = VocabConfig::default();
    let vcfg = VocabConfig {
        min_df: a.min_df.or(s.vocab.min_df).unwrap_or(defaults.min_df),
        max_df_ratio: a.max_df_ratio.or(s.vocab.max_df_ratio).unwrap_or(defaults.max_df_ratio),
        max_size: a.max_vocab.or(s.vocab.max_size).unwrap_or(defaults.max_size),
    };
    run.config(serde_json::json!({
        "min_token_len": pre.min_token_len,
        "stopwords": stopwords.as_ref().map(|p| p.display().to_string()),
        "lenient_dates": pre.date_mode == DateMode::Lenient,
        "year_range": pre.year_range,
        "min_df": vcfg.min_df,
        "max_df_ratio": vcfg.max_df_ratio,
        "max_vocab": vcfg.max_size,
    }));
    let report = ingest(&run.input(&a.input), &pre)?;
    let vocab = build_vocabulary(&report.documents, &vcfg)?;
    let bow = vectorize_all(&report.documents, &vocab);
    let mut warnings = String::new();
    for w in &report.warnings {
        let _ = writeln!(warnings, "line {}: {}", w.line, w.message);
    }
    run.write("vocab.tsv", &vocab.to_tsv())?;
    run.write("bow.tsv", &corpus::bow_to_string(&bow))?;
    run.write("stats.csv", &stats_csv(&corpus_stats(&report.documents)))?;
    run.write("warnings.txt", &warnings)?;
    eprintln!(
        "ingested {} documents, {} words, {} warnings",
        bow.len(),
        vocab.len(),
        report.warnings.len()
    );
    Ok(run.finish()?)
}

fn cmd_stats(a: StatsArgs, g: &Global) -> CmdResult {
    let mut run = Run::new("stats", g, &a.out.out)?;
    let pre = PreprocessConfig {
        date_mode: if a.lenient_dates || g.settings.preprocess.lenient_dates.unwrap_or(false) {
            DateMode::Lenient
        } else {
            DateMode::StrictIso
        },
        min_token_len: g.settings.preprocess.min_token_len.unwrap_or(2),
        ..Default::default()
    };
    run.config(serde_json::json!({
        "lenient_dates": pre.date_mode == DateMode::Lenient,
        "min_token_len": pre.min_token_len,
    }));
    let report = ingest(&run.input(&a.input), &pre)?;
    run.write("stats.csv", &stats_csv(&corpus_stats(&report.documents)))?;
    Ok(run.finish()?)
}

fn cmd_sample(a: SampleArgs, g: &Global) -> CmdResult {
    let s = &g.settings.sample;
    let mut run = Run::new("sample", g, &a.out.out)?;
    let budget = a
        .budget
        .or(s.budget)
        .ok_or_else(|| Failure::Usage("sample needs --budget (or [sample] budget in the config)".into()))?;
    let unit = match a.unit.or(s.unit).unwrap_or(UnitArg::Tokens) {
        UnitArg::Tokens => SampleUnit::Tokens,
        UnitArg::Articles => SampleUnit::Articles,
    };
    let plan = SamplePlan {
        unit,
        per_year_budget: budget,
        seed: g.seed,
    };
    run.config(serde_json::json!({
        "budget": budget,
        "unit": if unit == SampleUnit::Tokens { "tokens" } else { "articles" },
    }));
    let docs = corpus::read_bow(&run.input(&a.bow))?;
    let sample = sampler::balanced_sample(&docs, &plan)?;
    let report = sampler::sample_report(&docs, &sample)?;
    run.write("sample.tsv", &corpus::bow_to_string(&sample))?;
    run.write("sample_report.csv", &sampler::report_csv(&report))?;
    Ok(run.finish()?)
}

fn non_empty(docs: Vec<BowDocument>) -> Vec<BowDocument> {
    let before = docs.len();
    let kept: Vec<BowDocument> = docs.into_iter().filter(|d| !d.is_empty()).collect();
    if kept.len() < before {
        eprintln!("skipping {} documents with no in-vocabulary tokens", before - kept.len());
    }
    kept
}

fn lda_config(f: &LdaFlags, s: &LdaSettings, seed: u64) -> LdaConfig {
    let topics = f.topics.or(s.topics).unwrap_or(LdaConfig::default().topics);
    let base = LdaConfig::with_topics(topics);
    LdaConfig {
        topics,
        alpha: f.alpha.or(s.alpha).unwrap_or(base.alpha),
        beta: f.beta.or(s.beta).unwrap_or(base.beta),
        burn_in: f.burn_in.or(s.burn_in).unwrap_or(base.burn_in),
        samples: f.samples.or(s.samples).unwrap_or(base.samples),
        thin: f.thin.or(s.thin).unwrap_or(base.thin),
        seed,
        partitions: f.partitions.or(s.partitions).unwrap_or(base.partitions),
    }
}

fn top_words_tsv(rows: impl Iterator<Item = (String, usize, Vec<String>)>) -> String {
    let mut out = String::from("slice\ttopic\twords\n");
    for (label, k, words) in rows {
        let _ = writeln!(out, "{label}\t{k}\t{}", words.join(" "));
    }
    out
}

const TOP_WORDS: usize = 15;

fn cmd_train_lda(a: TrainLdaArgs, g: &Global) -> CmdResult {
    let mut run = Run::new("train-lda", g, &a.out.out)?;
    let cfg = lda_config(&a.lda, &g.settings.lda, g.seed);
    cfg.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    run.config(serde_json::json!({
        "topics": cfg.topics, "alpha": cfg.alpha, "beta": cfg.beta, "burn_in": cfg.burn_in,
        "samples": cfg.samples, "thin": cfg.thin, "partitions": cfg.partitions,
    }));
    let vocab = Vocabulary::read_tsv(&run.input(&a.vocab))?;
    let docs = non_empty(corpus::read_bow(&run.input(&a.bow))?);
    let model = lda::train_lda(&docs, &vocab, &cfg)?;
    model.save(&a.out.out.join("lda.tsv"))?;
    let n = TOP_WORDS.min(vocab.len());
    let rows = (0..model.topics)
        .map(|k| Ok(("all".to_string(), k, diagnostics::top_words(model.topic(k), &vocab, n)?)))
        .collect::<Result<Vec<_>>>()?;
    run.write("topics.tsv", &top_words_tsv(rows.into_iter()))?;
    Ok(run.finish()?)
}

fn cmd_train_dtm(a: TrainDtmArgs, g: &Global) -> CmdResult {
    let s = &g.settings.dtm;
    let mut run = Run::new("train-dtm", g, &a.out.out)?;
    let topics = a.topics.or(s.topics).unwrap_or(DtmConfig::default().topics);
    let base = DtmConfig::with_topics(topics);
    let cfg = DtmConfig {
        chain_variance: a.chain_variance.or(s.chain_variance).unwrap_or(base.chain_variance),
        alpha: a.alpha.or(s.alpha).unwrap_or(base.alpha),
        iters: a.iters.or(s.iters).unwrap_or(base.iters),
        seed: g.seed,
        init_lda: LdaConfig {
            burn_in: a.init_burn_in.or(s.init_burn_in).unwrap_or(base.init_lda.burn_in),
            samples: a.init_samples.or(s.init_samples).unwrap_or(base.init_lda.samples),
            ..base.init_lda
        },
        ..base
    };
    let granularity = a.granularity.or(s.granularity).unwrap_or(1);
    cfg.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    run.config(serde_json::json!({
        "topics": cfg.topics, "chain_variance": cfg.chain_variance, "alpha": cfg.alpha,
        "iters": cfg.iters, "granularity": granularity, "init_variance": cfg.init_variance,
        "obs_variance": cfg.obs_variance, "init_burn_in": cfg.init_lda.burn_in,
        "init_samples": cfg.init_lda.samples,
    }));
    let vocab = Vocabulary::read_tsv(&run.input(&a.vocab))?;
    let docs = non_empty(corpus::read_bow(&run.input(&a.bow))?);
    let sliced = slice_by_year(&docs, granularity)?;
    let model = dtm::train_dtm(&sliced, &vocab, &cfg)?;
    model.save(&a.out.out.join("dtm.tsv"))?;
    run.write("topics.tsv", &model.topics_tsv(&vocab)?)?;
    let mut elbo = String::from("iteration,elbo\n");
    for (i, v) in model.elbo_trace.iter().enumerate() {
        let _ = writeln!(elbo, "{i},{v}");
    }
    run.write("elbo.csv", &elbo)?;
    Ok(run.finish()?)
}

enum AnyModel {
    Lda(LdaModel),
    Dtm(DtmModel),
}

fn load_model(path: &Path) -> Result<AnyModel> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    match text.lines().next().and_then(|l| l.split('\t').next()) {
        Some("lda-model") => Ok(AnyModel::Lda(LdaModel::load(path)?)),
        Some("dtm-model") => Ok(AnyModel::Dtm(DtmModel::load(path)?)),
        _ => Err(Error::parse(path, 1, "not an lda-model or dtm-model bundle")),
    }
}

fn cmd_infer(a: InferArgs, g: &Global) -> CmdResult {
    let s = &g.settings.infer;
    let mut run = Run::new("infer", g, &a.out.out)?;
    let defaults = FoldInConfig::default();
    let cfg = FoldInConfig {
        burn_in: a.burn_in.or(s.burn_in).unwrap_or(defaults.burn_in),
        samples: a.samples.or(s.samples).unwrap_or(defaults.samples),
        seed: g.seed,
    };
    if cfg.samples == 0 {
        return Err(Failure::Usage("--samples must be at least 1".into()));
    }
    run.config(serde_json::json!({ "burn_in": cfg.burn_in, "samples": cfg.samples }));
    let model = load_model(&run.input(&a.model))?;
    let vocab = Vocabulary::read_tsv(&run.input(&a.vocab))?;
    let docs = corpus::read_bow(&run.input(&a.bow))?;
    let thetas = match &model {
        AnyModel::Lda(m) => lda::infer_all(m, &vocab, &docs, &cfg)?,
        AnyModel::Dtm(m) => dtm::infer_all_dtm(m, &vocab, &docs, &cfg)?,
    };
    let uninformed = thetas.iter().filter(|t| t.uninformed).count();
    if uninformed > 0 {
        eprintln!("{uninformed} documents had no in-vocabulary tokens and got uniform proportions");
    }
    run.write("thetas.csv", &inference::thetas_to_csv(&thetas))?;
    Ok(run.finish()?)
}

fn cmd_prominence(a: ProminenceArgs, g: &Global) -> CmdResult {
    let mut run = Run::new("prominence", g, &a.out.out)?;
    run.config(serde_json::json!({
        "clusters": a.clusters.as_ref().map(|p| p.display().to_string()),
        "trend_tolerance": prominence::TREND_TOLERANCE,
    }));
    let thetas = inference::read_thetas(&run.input(&a.thetas))?;
    let series = prominence::topic_prominence(&thetas)?;
    run.write("prominence.csv", &series.to_csv())?;
    let mut trends = String::from("series,slope,trend\n");
    let mut push_trend = |name: &str, values: &[f64]| {
        if let Ok((slope, t)) = prominence::trend_summary(&series.years, values) {
            let _ = writeln!(trends, "{name},{slope},{}", t.label());
        }
    };
    for k in 0..series.topics() {
        push_trend(&format!("topic_{k}"), &series.topic(k));
    }
    if let Some(path) = &a.clusters {
        let clusters = prominence::read_clusters(&run.input(path))?;
        run.write("clusters.csv", &prominence::clusters_csv(&series, &clusters)?)?;
        for c in &clusters {
            push_trend(&c.name, &prominence::cluster_prominence(&series, c)?);
        }
    }
    if series.years.len() >= 3 {
        run.write("trends.csv", &trends)?;
    }
    Ok(run.finish()?)
}

fn top_n(t: &TopicArgs, s: &DiagnosticSettings) -> usize {
    t.top_n.or(s.top_n).unwrap_or(10)
}

fn cmd_heatmap(a: HeatmapArgs, g: &Global) -> CmdResult {
    let s = &g.settings.diagnostics;
    let mut run = Run::new("heatmap", g, &a.out.out)?;
    let n = top_n(&a.topic, s);
    let lambda = a.lambda.or(s.lambda).unwrap_or(0.6);
    run.config(serde_json::json!({ "topic": a.topic.topic, "top_n": n, "lambda": lambda, "svg": a.svg }));
    let model = DtmModel::load(&run.input(&a.topic.model))?;
    let vocab = Vocabulary::read_tsv(&run.input(&a.topic.vocab))?;
    let heat = diagnostics::saliency_heatmap(&model, &vocab, a.topic.topic, n, lambda)?;
    run.write(&format!("heatmap_topic{}.csv", a.topic.topic), &heat.to_csv())?;
    if a.svg {
        run.write(&format!("heatmap_topic{}.svg", a.topic.topic), &heat.to_svg())?;
    }
    Ok(run.finish()?)
}

fn cmd_stretch(a: StretchArgs, g: &Global) -> CmdResult {
    let mut run = Run::new("stretch", g, &a.out.out)?;
    let n = top_n(&a.topic, &g.settings.diagnostics);
    run.config(serde_json::json!({
        "topic": a.topic.topic, "top_n": n,
        "onset_words": a.onset_words, "onset_slice": a.onset_slice,
    }));
    let model = DtmModel::load(&run.input(&a.topic.model))?;
    let vocab = Vocabulary::read_tsv(&run.input(&a.topic.vocab))?;
    let labels = model.slice_labels();
    let onset = match &a.onset_slice {
        None => None,
        Some(label) => {
            let slice = labels
                .iter()
                .position(|l| l == label)
                .ok_or_else(|| Failure::Usage(format!("unknown onset slice {label}; slices are {}", labels.join(","))))?;
            let words = a
                .onset_words
                .iter()
                .map(|w| vocab.id(w).ok_or_else(|| Failure::Usage(format!("onset word {w:?} is not in the vocabulary"))))
                .collect::<std::result::Result<Vec<_>, _>>()?;
            Some(OnsetSpec { words, slice })
        }
    };
    let report = diagnostics::stretch_score(&model, &vocab, a.topic.topic, n, onset.as_ref())?;
    run.write(&format!("stretch_topic{}.csv", a.topic.topic), &report.to_csv(&labels))?;
    Ok(run.finish()?)
}

fn cmd_match(a: MatchArgs, g: &Global) -> CmdResult {
    let mut run = Run::new("match", g, &a.out.out)?;
    run.config(serde_json::json!({}));
    let lda = LdaModel::load(&run.input(&a.lda))?;
    let dtm = DtmModel::load(&run.input(&a.dtm))?;
    let report = diagnostics::match_topics(&lda, &dtm)?;
    run.write("match.csv", &report.to_csv())?;
    Ok(run.finish()?)
}

fn cmd_synth(a: SynthArgs, g: &Global) -> CmdResult {
    let mut run = Run::new("synth", g, &a.out.out)?;
    let mut spec = match &a.scenario {
        Some(path) => {
            let text = fs::read_to_string(run.input(path)).map_err(|e| Error::io(path, e))?;
            toml::from_str::<ScenarioSpec>(&text)
                .map_err(|e| Failure::Usage(format!("scenario {}: {}", path.display(), e.message())))?
        }
        None => {
            let slices = a.slices.unwrap_or(10);
            let topics = a.topics.unwrap_or(5);
            let vocab = a.vocab_size.unwrap_or(100);
            match a.preset.unwrap_or(Preset::Constant) {
                Preset::Constant => ScenarioSpec::constant(slices, topics, vocab, g.seed),
                Preset::Trend => ScenarioSpec::linear_trend(slices, topics, vocab, g.seed),
                Preset::Onset => ScenarioSpec::onset(slices, topics, vocab, slices / 2, g.seed),
            }
        }
    };
    if a.scenario.is_some() {
        spec.slices = a.slices.unwrap_or(spec.slices);
        spec.vocab = a.vocab_size.unwrap_or(spec.vocab);
        if a.topics.is_some_and(|k| k != spec.topics) {
            return Err(Failure::Usage("--topics cannot change the topic count of a scenario file".into()));
        }
    }
    spec.seed = g.seed;
    spec.docs_per_slice = a.docs_per_slice.unwrap_or(spec.docs_per_slice);
    spec.tokens_per_doc = a.tokens_per_doc.unwrap_or(spec.tokens_per_doc);
    spec.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    run.config(serde_json::to_value(&spec).expect("spec serializes"));
    let scenario = synthgen::generate(&spec)?;
    scenario.write(&a.out.out)?;
    Ok(run.finish()?)
}
