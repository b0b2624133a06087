use std::io::{IsTerminal, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};

use acrodis::corpus::{load_corpus, load_records_with, save_corpus, save_records, AcronymRecord, DatasetOptions};
use acrodis::disambig::{disambiguate_with_model, disambiguate_with_progress, train_record_model, Query, QueryEmbedding};
use acrodis::embed::{Mode, Objective, TrainConfig};
use acrodis::eval::{
    emit_plot_data, evaluate_with, grid_sweep, save_report, sweep_table, table1_grid, EvalConfig, GridPoint,
    SweepCorpus,
};
use acrodis::matcher::{find_expansions, harvest_contexts, normalize_acronym, HarvestConfig, MatchRuleConfig};
use acrodis::model_io::{load_model, save_model};
use acrodis::seqmatch::DEFAULT_THRESHOLD;
use acrodis::synth::{generate, SynthConfig};
use acrodis::textproc::StopwordList;

#[derive(Parser)]
#[command(name = "acrodis", version, about = "Acronym disambiguation with paragraph vectors")]
struct Cli {
    /// Seed for every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads. 1 keeps every output reproducible.
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,
    #[arg(long, global = true, default_value = "info")]
    log_level: log::LevelFilter,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Find expansions of an acronym in a corpus and cut context windows.
    Harvest(HarvestArgs),
    /// Train a model over every context of one acronym.
    Train(TrainArgs),
    /// Pick the expansion that fits a context passage.
    Disambiguate(DisambiguateArgs),
    /// Leave-one-out accuracy over a dataset.
    Evaluate(EvaluateArgs),
    /// Evaluate a grid of configurations and print a results table.
    Sweep(SweepArgs),
    /// Write 2-D PCA coordinates of a model's context vectors.
    Plot(PlotArgs),
    /// Generate a synthetic corpus and dataset with known answers.
    Synth(SynthArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum CliMode {
    Dm,
    Dbow,
}

#[derive(Args)]
struct TrainFlags {
    #[arg(long, value_enum, default_value = "dm")]
    mode: CliMode,
    /// Embedding size; 500 for dm and 200 for dbow when omitted.
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long, default_value_t = 12)]
    epochs: usize,
    #[arg(long, default_value_t = 0.025)]
    lr: f32,
    /// Context half-width.
    #[arg(long, default_value_t = 5)]
    window: usize,
    #[arg(long, default_value_t = 1)]
    min_count: u32,
    /// Use negative sampling with this many negatives instead of the
    /// automatic objective choice.
    #[arg(long)]
    negatives: Option<u32>,
}

impl TrainFlags {
    fn config(&self, seed: u64, threads: usize) -> TrainConfig {
        let mode = match self.mode {
            CliMode::Dm => Mode::Dm,
            CliMode::Dbow => Mode::Dbow,
        };
        let base = TrainConfig::for_mode(mode);
        TrainConfig {
            dim: self.dim.unwrap_or(base.dim),
            window: self.window,
            epochs: self.epochs,
            learning_rate: self.lr,
            min_count: self.min_count,
            objective: self
                .negatives
                .map_or(Objective::Auto, |negatives| Objective::NegativeSampling { negatives }),
            seed,
            threads,
            ..base
        }
    }
}

#[derive(Args)]
struct DatasetFlags {
    #[arg(long)]
    dataset: PathBuf,
    /// Accept expansions that the letter-matching rules would not produce.
    #[arg(long)]
    allow_external: bool,
}

impl DatasetFlags {
    fn load(&self, stopwords: &StopwordList) -> anyhow::Result<Vec<AcronymRecord>> {
        let opts = DatasetOptions {
            stopwords: stopwords.clone(),
            allow_external_expansions: self.allow_external,
        };
        let recs = load_records_with(&self.dataset, &opts)?;
        if recs.is_empty() {
            bail!("dataset {} holds no records", self.dataset.display());
        }
        Ok(recs)
    }

    fn pick(&self, stopwords: &StopwordList, acronym: Option<&str>) -> anyhow::Result<AcronymRecord> {
        let recs = self.load(stopwords)?;
        match acronym {
            Some(a) => {
                let a = normalize_acronym(a);
                recs.into_iter()
                    .find(|r| r.acronym == a)
                    .ok_or_else(|| anyhow!("acronym {a} not in {}", self.dataset.display()))
            }
            None if recs.len() == 1 => Ok(recs.into_iter().next().unwrap()),
            None => bail!("dataset holds {} records; choose one with --acronym", recs.len()),
        }
    }
}

#[derive(Args)]
struct HarvestArgs {
    #[arg(long)]
    acronym: String,
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 1000)]
    before_chars: usize,
    #[arg(long, default_value_t = 1000)]
    after_chars: usize,
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    data: DatasetFlags,
    #[arg(long)]
    acronym: Option<String>,
    #[arg(long)]
    model: PathBuf,
    #[command(flatten)]
    train: TrainFlags,
}

#[derive(Args)]
struct DisambiguateArgs {
    #[command(flatten)]
    data: DatasetFlags,
    #[arg(long)]
    acronym: Option<String>,
    /// Query passage; read from standard input when omitted.
    #[arg(long)]
    context: Option<String>,
    /// Embed the query by inference against a model trained without it.
    #[arg(long)]
    infer: bool,
    /// Pretrained model for --infer.
    #[arg(long, requires = "infer")]
    model: Option<PathBuf>,
    #[command(flatten)]
    train: TrainFlags,
}

#[derive(Args)]
struct EvalFlags {
    #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
    threshold: f64,
    #[arg(long)]
    include_trivial: bool,
    #[arg(long)]
    max_queries: Option<usize>,
    #[arg(long)]
    infer: bool,
    /// Keep expansion phrases inside query passages.
    #[arg(long)]
    no_mask: bool,
}

impl EvalFlags {
    fn config(&self, train_cfg: TrainConfig, workers: usize) -> EvalConfig {
        EvalConfig {
            train_cfg,
            threshold: self.threshold,
            max_queries_per_acronym: self.max_queries,
            include_trivial: self.include_trivial,
            query_embedding: if self.infer { QueryEmbedding::Infer } else { QueryEmbedding::Retrain },
            mask_expansions: !self.no_mask,
            workers,
            grid: Vec::new(),
        }
    }
}

#[derive(Args)]
struct EvaluateArgs {
    #[command(flatten)]
    data: DatasetFlags,
    /// JSON-lines report file.
    #[arg(long)]
    report: Option<PathBuf>,
    #[command(flatten)]
    eval: EvalFlags,
    #[command(flatten)]
    train: TrainFlags,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    data: DatasetFlags,
    /// Corpus for grid points that re-cut windows.
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// JSON array of grid points.
    #[arg(long, conflicts_with = "table1", required_unless_present = "table1")]
    grid: Option<PathBuf>,
    /// The nine configurations of the published results table.
    #[arg(long)]
    table1: bool,
    /// Table output; printed to standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    eval: EvalFlags,
}

#[derive(Args)]
struct PlotArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    out_corpus: PathBuf,
    #[arg(long)]
    out_dataset: PathBuf,
    #[arg(long, default_value_t = 20)]
    acronyms: usize,
    #[arg(long, default_value_t = 5)]
    contexts: usize,
    #[arg(long, default_value_t = 120)]
    words_per_side: usize,
}

/// Successful run that found nothing to report.
struct Empty(String);

fn log_epoch(s: &acrodis::embed::EpochStats) {
    log::info!("epoch={} loss={:.6}", s.epoch, s.loss);
}

fn read_context(arg: Option<String>) -> anyhow::Result<String> {
    let text = match arg {
        Some(t) => t,
        None => {
            let mut s = String::new();
            if !std::io::stdin().is_terminal() {
                std::io::stdin().read_to_string(&mut s).context("reading standard input")?;
            }
            s
        }
    };
    if text.trim().is_empty() {
        bail!("empty context");
    }
    Ok(text)
}

fn write_file(path: &Path, text: &str) -> anyhow::Result<()> {
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn run(cli: Cli) -> anyhow::Result<Result<(), Empty>> {
    if cli.threads == 0 {
        bail!("--threads must be at least 1");
    }
    let stopwords = StopwordList::from_env()?;
    let mut stdout = std::io::stdout().lock();
    match cli.command {
        Command::Harvest(a) => {
            let corpus = load_corpus(&a.corpus)?;
            let acronym = normalize_acronym(&a.acronym);
            if acronym.is_empty() {
                bail!("acronym {:?} has no letters or digits", a.acronym);
            }
            let occ = find_expansions(&acronym, &corpus, &stopwords, &MatchRuleConfig::for_acronym(&acronym));
            let harvest = HarvestConfig {
                before_chars: a.before_chars,
                after_chars: a.after_chars,
            };
            let record = harvest_contexts(&acronym, &occ, &corpus, &harvest)?;
            if record.entries.is_empty() {
                return Ok(Err(Empty(format!("no expansions found for {acronym}"))));
            }
            save_records(std::slice::from_ref(&record), &a.out)?;
            writeln!(
                stdout,
                "acronym={} expansions={} contexts={}",
                record.acronym,
                record.entries.len(),
                record.n_contexts()
            )?;
        }
        Command::Train(a) => {
            let record = a.data.pick(&stopwords, a.acronym.as_deref())?;
            let cfg = a.train.config(cli.seed, cli.threads);
            let model = train_record_model(&record, &cfg, log_epoch)?;
            save_model(&model, &a.model)?;
            writeln!(
                stdout,
                "acronym={} docs={} vocab={} dim={}",
                record.acronym,
                model.n_docs(),
                model.vocab.len(),
                model.dim()
            )?;
        }
        Command::Disambiguate(a) => {
            let context = read_context(a.context)?;
            let record = a.data.pick(&stopwords, a.acronym.as_deref())?;
            let query = Query::new(a.acronym.unwrap_or_else(|| record.acronym.clone()), context);
            let cfg = a.train.config(cli.seed, cli.threads);
            let result = if a.infer {
                let model = match &a.model {
                    Some(p) => load_model(p)?,
                    None => train_record_model(&record, &cfg, log_epoch)?,
                };
                disambiguate_with_model(&record, &model, &query)?
            } else {
                disambiguate_with_progress(&record, &query, &cfg, log_epoch)?
            };
            writeln!(stdout, "{}", result.to_json_line())?;
        }
        Command::Evaluate(a) => {
            let records = a.data.load(&stopwords)?;
            let cfg = a.eval.config(a.train.config(cli.seed, 1), cli.threads);
            let report = evaluate_with(&records, &cfg, &stopwords, &|_| {})?;
            if let Some(p) = &a.report {
                save_report(&report, p)?;
            }
            writeln!(
                stdout,
                "accuracy={:.6} queries={} correct={}",
                report.overall_accuracy,
                report.n_queries(),
                report.n_correct()
            )?;
        }
        Command::Sweep(a) => {
            let records = a.data.load(&stopwords)?;
            let grid: Vec<GridPoint> = match &a.grid {
                Some(p) => {
                    let raw = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
                    let mut g: Vec<GridPoint> = serde_json::from_str(&raw).with_context(|| format!("parsing {}", p.display()))?;
                    for point in &mut g {
                        point.train.seed = cli.seed;
                        point.train.threads = 1;
                    }
                    g
                }
                None => table1_grid(cli.seed),
            };
            let documents = a.corpus.as_ref().map(load_corpus).transpose()?;
            let sweep_corpus = documents.as_deref().map(|documents| SweepCorpus {
                documents,
                stopwords: &stopwords,
            });
            let cfg = EvalConfig {
                grid,
                ..a.eval.config(TrainConfig::dm(), cli.threads)
            };
            let rows = grid_sweep(&records, &cfg, sweep_corpus.as_ref())?;
            let table = sweep_table(&rows);
            match &a.out {
                Some(p) => write_file(p, &table)?,
                None => write!(stdout, "{table}")?,
            }
        }
        Command::Plot(a) => {
            let model = load_model(&a.model)?;
            emit_plot_data(&model, &a.out)?;
            writeln!(stdout, "points={}", model.n_docs())?;
        }
        Command::Synth(a) => {
            let bench = generate(&SynthConfig {
                n_acronyms: a.acronyms,
                contexts_per_expansion: a.contexts,
                words_per_side: a.words_per_side,
                seed: cli.seed,
                ..SynthConfig::default()
            })?;
            save_corpus(&bench.corpus, &a.out_corpus)?;
            save_records(&bench.records, &a.out_dataset)?;
            writeln!(
                stdout,
                "documents={} records={}",
                bench.corpus.len(),
                bench.records.len()
            )?;
        }
    }
    Ok(Ok(()))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    env_logger::Builder::new()
        .filter_level(cli.log_level)
        .format(|buf, record| writeln!(buf, "{}", record.args()))
        .target(env_logger::Target::Stderr)
        .init();
    match run(cli) {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(Empty(msg))) => {
            eprintln!("{msg}");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
