//! Command implementations behind the `geometa` binary.
//!
//! Every command reads and validates all of its inputs and finishes its
//! computation before creating any output file.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use geometa::embio::{self, AlignedPair, EmbeddingTable, PreprocessOptions};
use geometa::eval::{self, AnalogyDataset, EvalError, EvalReport, SimilarityDataset, Task};
use geometa::meta::{self, MetaMode};
use geometa::objective::build_gram_cache;
use geometa::optimizer::{self, SolveTrace, SolverConfig};
use geometa::params::{ParamsFile, ParamsHeader};
use geometa::{Error as CoreError, RegWeight};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
    #[error("solver failure: {0}")]
    Solver(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Solver(_) => 3,
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::Solver(e) => CliError::Solver(e.to_string()),
            other => CliError::Data(other.to_string()),
        }
    }
}

fn data<E: Into<CoreError>>(context: impl std::fmt::Display) -> impl FnOnce(E) -> CliError {
    move |e| CliError::Data(format!("{context}: {}", e.into()))
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |e| CliError::Data(format!("{}: {e}", path.display()))
}

#[derive(Debug, Parser)]
#[command(name = "geometa", version, about = "Geometry-aware word meta-embeddings")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Learn rotations and a metric aligning two embedding files.
    Train(TrainArgs),
    /// Write meta-embeddings for the shared vocabulary of two embedding files.
    Transform(TransformArgs),
    /// Score an embedding file on every benchmark in a directory.
    Eval(EvalArgs),
    /// train, transform and eval in one go.
    Pipeline(PipelineArgs),
}

#[derive(Debug, Clone, Args)]
pub struct LoadArgs {
    /// Read at most this many words from each embedding file.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub max_words: Option<u64>,
    /// Scale each word vector to unit length before training (default).
    #[arg(long, overrides_with = "no_unit_norm")]
    pub unit_norm: bool,
    /// Keep the raw vector lengths.
    #[arg(long, overrides_with = "unit_norm")]
    pub no_unit_norm: bool,
    /// Subtract the per-dimension mean before normalizing.
    #[arg(long)]
    pub mean_center: bool,
}

impl LoadArgs {
    pub fn preprocess_options(&self) -> PreprocessOptions {
        PreprocessOptions {
            unit_normalize: !self.no_unit_norm,
            mean_center: self.mean_center,
        }
    }

    fn max_words(&self) -> Option<usize> {
        self.max_words.map(|m| m as usize)
    }
}

#[derive(Debug, Clone, Args)]
pub struct SolverArgs {
    /// Weight c of the ‖B‖² regularizer (try 0.01, 0.1, 1, 10).
    #[arg(long, default_value_t = 1.0)]
    pub reg_c: f64,
    #[arg(long, default_value_t = 500)]
    pub max_iters: usize,
    /// Stop when the gradient norm falls below this fraction of its initial value.
    #[arg(long, default_value_t = 1e-6)]
    pub grad_tol: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Write per-iteration loss, gradient norm and step as TSV.
    #[arg(long)]
    pub trace: Option<PathBuf>,
}

impl SolverArgs {
    pub fn config(&self) -> Result<SolverConfig, CliError> {
        let reg_c = RegWeight::new(self.reg_c)
            .ok_or_else(|| CliError::Usage(format!("--reg-c must be >= 0, got {}", self.reg_c)))?;
        if !(self.grad_tol.is_finite() && self.grad_tol >= 0.0) {
            return Err(CliError::Usage(format!("--grad-tol must be >= 0, got {}", self.grad_tol)));
        }
        Ok(SolverConfig {
            reg_c,
            max_iters: self.max_iters,
            grad_tol: self.grad_tol,
            seed: self.seed,
            ..SolverConfig::default()
        })
    }
}

#[derive(Debug, Clone, Args)]
pub struct TrainArgs {
    pub src_x: PathBuf,
    pub src_z: PathBuf,
    /// Destination of the parameters file.
    #[arg(long, short)]
    pub out: PathBuf,
    #[command(flatten)]
    pub load: LoadArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
}

#[derive(Debug, Clone, Args)]
pub struct TransformArgs {
    /// Parameters written by `train`. Required for the geo-* modes.
    #[arg(long)]
    pub params: Option<PathBuf>,
    pub src_x: PathBuf,
    pub src_z: PathBuf,
    /// One of avg, conc, geo-avg, geo-conc.
    #[arg(long, default_value = "geo-conc", value_parser = parse_mode)]
    pub mode: MetaMode,
    /// Scale each meta-embedding to unit length.
    #[arg(long)]
    pub renorm: bool,
    #[arg(long, short)]
    pub out: PathBuf,
    /// Preprocessing flags, used only when no parameters file is given.
    #[command(flatten)]
    pub load: LoadArgs,
}

#[derive(Debug, Clone, Args)]
pub struct EvalArgs {
    pub embeddings: PathBuf,
    /// Directory of `*.sim.tsv`, `*.ana.tsv` and `*.anascored.tsv` files.
    #[arg(long)]
    pub datasets: PathBuf,
    #[arg(long, short)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct PipelineArgs {
    pub src_x: PathBuf,
    pub src_z: PathBuf,
    #[arg(long)]
    pub datasets: PathBuf,
    /// Receives params.txt, meta.txt and report.tsv.
    #[arg(long)]
    pub out_dir: PathBuf,
    /// One of avg, conc, geo-avg, geo-conc.
    #[arg(long, default_value = "geo-conc", value_parser = parse_mode)]
    pub mode: MetaMode,
    #[arg(long)]
    pub renorm: bool,
    #[command(flatten)]
    pub load: LoadArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
}

fn parse_mode(s: &str) -> Result<MetaMode, String> {
    s.parse::<MetaMode>().map_err(|e| e.to_string())
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Train(a) => cmd_train(&a).map(|_| ()),
        Command::Transform(a) => cmd_transform(&a),
        Command::Eval(a) => cmd_eval(&a).map(|_| ()),
        Command::Pipeline(a) => cmd_pipeline(&a),
    }
}

fn load_pair(
    src_x: &Path,
    src_z: &Path,
    max_words: Option<usize>,
    opts: PreprocessOptions,
) -> Result<AlignedPair, CliError> {
    let x = embio::load_embeddings(src_x, max_words).map_err(data(src_x.display()))?;
    let z = embio::load_embeddings(src_z, max_words).map_err(data(src_z.display()))?;
    let (x, _) = embio::preprocess(&x, opts);
    let (z, _) = embio::preprocess(&z, opts);
    embio::intersect_vocab(&x, &z).map_err(data("intersecting vocabularies"))
}

fn source_name(p: &Path) -> String {
    p.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| p.display().to_string())
}

pub struct TrainOutcome {
    pub params: ParamsFile,
    pub trace: SolveTrace,
    pub shared_words: usize,
}

fn train(
    src_x: &Path,
    src_z: &Path,
    load: &LoadArgs,
    solver: &SolverArgs,
) -> Result<(TrainOutcome, AlignedPair), CliError> {
    let cfg = solver.config()?;
    let opts = load.preprocess_options();
    let pair = load_pair(src_x, src_z, load.max_words(), opts)?;
    let cache = build_gram_cache(&pair);
    let (point, trace) = optimizer::solve(&cache, &cfg, None).map_err(CoreError::from)?;
    let params = ParamsFile {
        header: ParamsHeader {
            source_x: source_name(src_x),
            source_z: source_name(src_z),
            preprocess: opts,
            reg_c: cfg.reg_c.value(),
            termination: trace.termination,
            iterations: trace.iterations(),
            final_loss: trace.final_loss(),
        },
        point,
    };
    let shared_words = pair.len();
    Ok((
        TrainOutcome {
            params,
            trace,
            shared_words,
        },
        pair,
    ))
}

fn write_trace(path: &Path, trace: &SolveTrace) -> Result<(), CliError> {
    let file = fs::File::create(path).map_err(io_err(path))?;
    trace
        .write_tsv(std::io::BufWriter::new(file))
        .map_err(io_err(path))
}

fn report_training(o: &TrainOutcome) {
    println!(
        "shared vocabulary: {} words, dimension {}",
        o.shared_words,
        o.params.point.dim()
    );
    println!(
        "loss: {:.6} -> {:.6} after {} iterations ({})",
        o.trace.initial_loss(),
        o.trace.final_loss(),
        o.trace.iterations(),
        o.trace.termination
    );
}

pub fn cmd_train(a: &TrainArgs) -> Result<TrainOutcome, CliError> {
    let (outcome, _) = train(&a.src_x, &a.src_z, &a.load, &a.solver)?;
    outcome.params.save(&a.out).map_err(data(a.out.display()))?;
    if let Some(path) = &a.solver.trace {
        write_trace(path, &outcome.trace)?;
    }
    report_training(&outcome);
    Ok(outcome)
}

fn meta_table(
    pair: &AlignedPair,
    params: Option<&ParamsFile>,
    mode: MetaMode,
    renorm: bool,
) -> Result<EmbeddingTable, CliError> {
    let map = match params {
        Some(p) => {
            if p.point.dim() != pair.dim() {
                return Err(CliError::Data(format!(
                    "parameters have dimension {}, embeddings have dimension {}",
                    p.point.dim(),
                    pair.dim()
                )));
            }
            Some(meta::make_latent_map(&p.point).map_err(CoreError::from)?)
        }
        None if mode.is_geometric() => {
            return Err(CliError::Usage(format!("mode {mode} requires --params")))
        }
        None => None,
    };
    let table = meta::build_meta(pair, map.as_ref(), mode).map_err(CoreError::from)?;
    Ok(if renorm {
        meta::renormalize(&table)
    } else {
        table
    })
}

pub fn cmd_transform(a: &TransformArgs) -> Result<(), CliError> {
    let params = match &a.params {
        Some(p) => Some(ParamsFile::load(p).map_err(data(p.display()))?),
        None => None,
    };
    if params.is_none() && a.mode.is_geometric() {
        return Err(CliError::Usage(format!("mode {} requires --params", a.mode)));
    }
    let opts = params
        .as_ref()
        .map_or_else(|| a.load.preprocess_options(), |p| p.header.preprocess);
    let pair = load_pair(&a.src_x, &a.src_z, a.load.max_words(), opts)?;
    let table = meta_table(&pair, params.as_ref(), a.mode, a.renorm)?;
    embio::save_embeddings(&table, &a.out, true).map_err(data(a.out.display()))?;
    println!(
        "wrote {} {} meta-embeddings of dimension {}",
        table.len(),
        a.mode,
        table.dim()
    );
    Ok(())
}

enum Benchmark {
    Similarity(SimilarityDataset),
    Analogy(AnalogyDataset, bool),
}

impl Benchmark {
    fn name(&self) -> &str {
        match self {
            Benchmark::Similarity(d) => &d.name,
            Benchmark::Analogy(d, _) => &d.name,
        }
    }

    fn task(&self) -> Task {
        match self {
            Benchmark::Similarity(_) => Task::Similarity,
            Benchmark::Analogy(_, false) => Task::Analogy,
            Benchmark::Analogy(_, true) => Task::ScoredAnalogy,
        }
    }

    fn rows(&self) -> usize {
        match self {
            Benchmark::Similarity(d) => d.rows.len(),
            Benchmark::Analogy(d, _) => d.rows.len(),
        }
    }

    fn evaluate(&self, t: &EmbeddingTable) -> Result<EvalReport, EvalError> {
        match self {
            Benchmark::Similarity(d) => eval::eval_similarity(t, d),
            Benchmark::Analogy(d, scored) => eval::eval_analogy(t, d, *scored),
        }
    }
}

/// Loads every benchmark in `dir`, sorted by file name.
fn discover(dir: &Path) -> Result<Vec<Benchmark>, CliError> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(io_err(dir))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file())
        .collect();
    files.sort();
    let mut out = Vec::new();
    for path in files {
        let Some(fname) = path.file_name().and_then(|f| f.to_str()) else {
            continue;
        };
        let bench = if let Some(name) = fname.strip_suffix(".sim.tsv") {
            Benchmark::Similarity(SimilarityDataset::load(name, &path).map_err(data(path.display()))?)
        } else if let Some(name) = fname.strip_suffix(".anascored.tsv") {
            Benchmark::Analogy(AnalogyDataset::load(name, &path, true).map_err(data(path.display()))?, true)
        } else if let Some(name) = fname.strip_suffix(".ana.tsv") {
            Benchmark::Analogy(AnalogyDataset::load(name, &path, false).map_err(data(path.display()))?, false)
        } else {
            continue;
        };
        out.push(bench);
    }
    if out.is_empty() {
        return Err(CliError::Data(format!(
            "no *.sim.tsv, *.ana.tsv or *.anascored.tsv datasets in {}",
            dir.display()
        )));
    }
    Ok(out)
}

/// One evaluated benchmark; `result` is `Err` when it had to be skipped.
pub struct EvalRow {
    pub dataset: String,
    pub task: Task,
    pub n_total: usize,
    pub result: Result<EvalReport, String>,
}

pub const REPORT_HEADER: &str = "dataset\ttask\tmetric\tscore\tn_total\tn_used\tcoverage\tstatus";

pub fn report_tsv(rows: &[EvalRow]) -> String {
    let mut out = String::new();
    out.push_str(REPORT_HEADER);
    out.push('\n');
    for r in rows {
        let _ = match &r.result {
            Ok(rep) => writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\tok",
                rep.dataset,
                rep.task.as_str(),
                rep.metric(),
                rep.score,
                rep.n_total,
                rep.n_used,
                rep.coverage()
            ),
            Err(reason) => writeln!(
                out,
                "{}\t{}\t{}\tNA\t{}\tNA\tNA\tskipped: {}",
                r.dataset,
                r.task.as_str(),
                r.task.metric(),
                r.n_total,
                reason.replace(['\t', '\n'], " ")
            ),
        };
    }
    out
}

fn evaluate_all(table: &EmbeddingTable, benches: &[Benchmark]) -> Vec<EvalRow> {
    benches
        .iter()
        .map(|b| EvalRow {
            dataset: b.name().to_string(),
            task: b.task(),
            n_total: b.rows(),
            result: b.evaluate(table).map_err(|e| e.to_string()),
        })
        .collect()
}

fn print_rows(rows: &[EvalRow]) {
    for r in rows {
        match &r.result {
            Ok(rep) => println!("{rep}"),
            Err(reason) => println!("dataset={} task={} skipped: {reason}", r.dataset, r.task.as_str()),
        }
    }
}

pub fn cmd_eval(a: &EvalArgs) -> Result<Vec<EvalRow>, CliError> {
    let benches = discover(&a.datasets)?;
    let table = embio::load_embeddings(&a.embeddings, None).map_err(data(a.embeddings.display()))?;
    let rows = evaluate_all(&table, &benches);
    fs::write(&a.out, report_tsv(&rows)).map_err(io_err(&a.out))?;
    print_rows(&rows);
    Ok(rows)
}

pub const PARAMS_FILE: &str = "params.txt";
pub const META_FILE: &str = "meta.txt";
pub const REPORT_FILE: &str = "report.tsv";
pub const TRACE_FILE: &str = "trace.tsv";

pub fn cmd_pipeline(a: &PipelineArgs) -> Result<(), CliError> {
    let benches = discover(&a.datasets)?;
    let (outcome, pair) = train(&a.src_x, &a.src_z, &a.load, &a.solver)?;
    let table = meta_table(&pair, Some(&outcome.params), a.mode, a.renorm)?;
    let rows = evaluate_all(&table, &benches);

    fs::create_dir_all(&a.out_dir).map_err(io_err(&a.out_dir))?;
    let params_path = a.out_dir.join(PARAMS_FILE);
    outcome.params.save(&params_path).map_err(data(params_path.display()))?;
    let meta_path = a.out_dir.join(META_FILE);
    embio::save_embeddings(&table, &meta_path, true).map_err(data(meta_path.display()))?;
    let report_path = a.out_dir.join(REPORT_FILE);
    fs::write(&report_path, report_tsv(&rows)).map_err(io_err(&report_path))?;
    let trace_path = a.solver.trace.clone().unwrap_or_else(|| a.out_dir.join(TRACE_FILE));
    write_trace(&trace_path, &outcome.trace)?;

    report_training(&outcome);
    print_rows(&rows);
    Ok(())
}
