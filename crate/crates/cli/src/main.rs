//! `sparsegnn`: generate sparsity-pattern corpora, train and evaluate graph
//! classifiers on them, and run robustness and gradient checks.
//!
//! Exit codes: 0 success, 2 usage error, 3 data error, 4 internal failure
//! (including a failed gradient check).

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use sparsegnn::featenc::EncoderConfig;
use sparsegnn::graphrep::{coo_to_graph, degree_histogram, Graph};
use sparsegnn::matgen::{build_dataset, DatasetManifest, DimsRange, Registry, DEFAULT_COUNT_PER_CLASS};
use sparsegnn::nn::gradcheck::{grad_check, random_problem};
use sparsegnn::nn::Model;
use sparsegnn::trainer::{
    evaluate_graphs, load_checkpoint, mean_accuracy, predict_proba, robustness_table, summary_tsv,
    train, Corpus, TrainConfig,
};
use sparsegnn::{CooPattern, Error};

const EXIT_USAGE: u8 = 2;
const EXIT_DATA: u8 = 3;
const EXIT_INTERNAL: u8 = 4;
const CONFIG_FILE: &str = "config.json";

#[derive(Parser)]
#[command(name = "sparsegnn", version, about = "Graph classification of sparse matrix patterns")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a labelled corpus of sparsity patterns and its manifest.
    Generate(GenerateArgs),
    /// Train with stratified k-fold cross-validation.
    Train(TrainArgs),
    /// Score a checkpoint on every graph of a manifest.
    Evaluate(EvaluateArgs),
    /// Classify a single pattern file.
    Classify(ClassifyArgs),
    /// Compare accuracy on node samples, relabelled graphs and originals.
    Perturb(PerturbArgs),
    /// Write pooled degree histograms per class.
    Report(ReportArgs),
    /// Verify backpropagation against finite differences.
    Gradcheck(GradcheckArgs),
}

#[derive(Args)]
struct GenerateArgs {
    /// Comma-separated class names.
    #[arg(long, value_delimiter = ',', default_value = "diagonal,random,rand-diag,kronecker")]
    classes: Vec<String>,
    #[arg(long, default_value_t = DEFAULT_COUNT_PER_CLASS)]
    per_class: usize,
    #[arg(long, default_value_t = DimsRange::FULL.min)]
    min_dim: usize,
    #[arg(long, default_value_t = DimsRange::FULL.max)]
    max_dim: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum EncoderKind {
    Onehot,
    Ldp,
    Lboh,
    Eboh,
}

#[derive(Args)]
struct EncoderArgs {
    #[arg(long, value_enum, default_value = "eboh")]
    encoder: EncoderKind,
    /// LBOH: unit buckets below alpha; EBOH: unit buckets up to 2^alpha.
    #[arg(long)]
    alpha: Option<usize>,
    /// LBOH bucket width.
    #[arg(long)]
    beta: Option<usize>,
    /// Number of ranged buckets.
    #[arg(long)]
    k: Option<usize>,
    /// One-hot vocabulary bound; defaults to the corpus maximum.
    #[arg(long)]
    max_degree: Option<usize>,
}

impl EncoderArgs {
    fn resolve(&self, corpus_max_degree: impl FnOnce() -> sparsegnn::Result<usize>) -> sparsegnn::Result<EncoderConfig> {
        let narrow = |v: usize, name: &str| {
            u32::try_from(v).map_err(|_| Error::invalid(format!("--{name} {v} is too large")))
        };
        let unused = |flag: Option<usize>, name: &str| match flag {
            Some(_) => Err(Error::invalid(format!(
                "--{name} does not apply to the {} encoder",
                self.kind_name()
            ))),
            None => Ok(()),
        };
        let config = match self.encoder {
            EncoderKind::Onehot => {
                unused(self.alpha, "alpha")?;
                unused(self.beta, "beta")?;
                unused(self.k, "k")?;
                let max_degree = match self.max_degree {
                    Some(d) => d,
                    None => corpus_max_degree()?,
                };
                EncoderConfig::OneHot { max_degree }
            }
            EncoderKind::Ldp => {
                for (flag, name) in [(self.alpha, "alpha"), (self.beta, "beta"), (self.k, "k"), (self.max_degree, "max-degree")] {
                    unused(flag, name)?;
                }
                EncoderConfig::Ldp
            }
            EncoderKind::Lboh => {
                unused(self.max_degree, "max-degree")?;
                let EncoderConfig::Lboh { alpha, beta, k } = EncoderConfig::DEFAULT_LBOH else {
                    unreachable!()
                };
                EncoderConfig::Lboh {
                    alpha: self.alpha.unwrap_or(alpha),
                    beta: self.beta.unwrap_or(beta),
                    k: self.k.unwrap_or(k),
                }
            }
            EncoderKind::Eboh => {
                unused(self.max_degree, "max-degree")?;
                unused(self.beta, "beta")?;
                let EncoderConfig::Eboh { alpha, k } = EncoderConfig::DEFAULT_EBOH else {
                    unreachable!()
                };
                EncoderConfig::Eboh {
                    alpha: self.alpha.map(|a| narrow(a, "alpha")).transpose()?.unwrap_or(alpha),
                    k: self.k.map(|v| narrow(v, "k")).transpose()?.unwrap_or(k),
                }
            }
        };
        config.validate()?;
        Ok(config)
    }

    fn kind_name(&self) -> &'static str {
        match self.encoder {
            EncoderKind::Onehot => "onehot",
            EncoderKind::Ldp => "ldp",
            EncoderKind::Lboh => "lboh",
            EncoderKind::Eboh => "eboh",
        }
    }
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[command(flatten)]
    encoder: EncoderArgs,
    #[arg(long, default_value_t = 256)]
    batch_size: usize,
    #[arg(long, default_value_t = 0.01)]
    lr: f64,
    #[arg(long, default_value_t = 50)]
    epochs: usize,
    #[arg(long, default_value_t = 5)]
    folds: usize,
    /// Epochs without a new best validation loss before a fold stops; 0 disables.
    #[arg(long, default_value_t = 10)]
    patience: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    #[arg(long)]
    manifest: PathBuf,
    /// Clamp degrees beyond a one-hot vocabulary instead of failing.
    #[arg(long)]
    clamp: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ClassifyArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    #[arg(long)]
    pattern: PathBuf,
    /// Clamp degrees beyond a one-hot vocabulary instead of failing.
    #[arg(long)]
    clamp: bool,
}

#[derive(Args)]
struct PerturbArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    #[arg(long)]
    manifest: PathBuf,
    /// Fraction of nodes kept by uniform random node sampling.
    #[arg(long, default_value_t = 0.5)]
    fraction: f64,
    /// Perturbed variants per source graph.
    #[arg(long, default_value_t = 10)]
    variants: usize,
    /// Use only the first N graphs of each class as sources.
    #[arg(long)]
    per_class: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ReportArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct GradcheckArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1e-4)]
    tolerance: f64,
    /// Central-difference step.
    #[arg(long, default_value_t = 1e-5)]
    step: f64,
    #[command(flatten)]
    encoder: EncoderArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

enum Failure {
    Lib(Error),
    /// A self-check ran to completion and did not pass.
    Check(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

type CmdResult = Result<(), Failure>;

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::InvalidParameter(_) | Error::Conflict(_) => EXIT_USAGE,
        Error::UnsupportedShape { .. }
        | Error::OutOfVocabulary { .. }
        | Error::InvalidInput(_)
        | Error::Io { .. }
        | Error::NotFound { .. }
        | Error::Parse { .. }
        | Error::Integrity(_) => EXIT_DATA,
        Error::Shape(_) | Error::Usage(_) => EXIT_INTERNAL,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Generate(a) => cmd_generate(a),
        Command::Train(a) => cmd_train(a),
        Command::Evaluate(a) => cmd_evaluate(a),
        Command::Classify(a) => cmd_classify(a),
        Command::Perturb(a) => cmd_perturb(a),
        Command::Report(a) => cmd_report(a),
        Command::Gradcheck(a) => cmd_gradcheck(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Lib(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
        Err(Failure::Check(msg)) => {
            eprintln!("check failed: {msg}");
            ExitCode::from(EXIT_INTERNAL)
        }
    }
}

fn write_file(path: &Path, body: &str) -> sparsegnn::Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    std::fs::write(path, body).map_err(|e| Error::io(path, e))
}

fn record_config(dir: &Path, command: &str, config: Value) -> sparsegnn::Result<()> {
    let body = json!({ "command": command, "version": env!("CARGO_PKG_VERSION"), "config": config });
    write_file(
        &dir.join(CONFIG_FILE),
        &serde_json::to_string_pretty(&body).expect("json value serializes"),
    )
}

fn path_str(p: &Path) -> String {
    p.display().to_string()
}

fn cmd_generate(a: GenerateArgs) -> CmdResult {
    if a.per_class == 0 {
        return Err(Error::invalid("--per-class must be at least 1").into());
    }
    let dims = DimsRange::new(a.min_dim, a.max_dim)?;
    let registry = Registry::from_names(&a.classes, a.per_class)?;
    let class_names = registry.class_names();
    record_config(
        &a.out,
        "generate",
        json!({
            "classes": class_names,
            "per_class": a.per_class,
            "min_dim": dims.min,
            "max_dim": dims.max,
            "seed": a.seed,
            "out": path_str(&a.out),
        }),
    )?;
    let manifest = build_dataset(&registry, dims, a.seed, &a.out)?;
    println!(
        "wrote {} patterns to {} (dims {}..={}, seed {})",
        manifest.len(),
        a.out.display(),
        dims.min,
        dims.max,
        a.seed
    );
    for (name, count) in manifest.class_names.iter().zip(manifest.class_counts()) {
        println!("{name}\t{count}");
    }
    Ok(())
}

fn cmd_train(a: TrainArgs) -> CmdResult {
    let manifest = DatasetManifest::read(&a.manifest)?;
    let encoder = a.encoder.resolve(|| Ok(Corpus::from_manifest(&manifest)?.max_degree()))?;
    let mut config = TrainConfig::new(&a.manifest, encoder);
    config.batch_size = a.batch_size;
    config.lr = a.lr;
    config.epochs = a.epochs;
    config.folds = a.folds;
    config.patience = (a.patience > 0).then_some(a.patience);
    config.seed = a.seed;
    config.output_dir = Some(a.out.clone());
    config.validate()?;
    if encoder.is_onehot() && config.batch_size != 1 {
        eprintln!(
            "warning: one-hot features train with batch size 1; ignoring --batch-size {}",
            config.batch_size
        );
        config.batch_size = 1;
    }
    record_config(
        &a.out,
        "train",
        serde_json::to_value(&config).expect("train config serializes"),
    )?;
    let folds = train(&config)?;
    print!("{}", summary_tsv(&folds));
    println!("mean accuracy {:.4} over {} folds", mean_accuracy(&folds), folds.len());
    Ok(())
}

fn check_classes(model: &Model, manifest: &DatasetManifest) -> sparsegnn::Result<()> {
    if model.class_names != manifest.class_names {
        return Err(Error::InvalidInput(format!(
            "checkpoint classes {:?} differ from manifest classes {:?}",
            model.class_names, manifest.class_names
        )));
    }
    Ok(())
}

fn cmd_evaluate(a: EvaluateArgs) -> CmdResult {
    let model = load_checkpoint(&a.checkpoint)?;
    let manifest = DatasetManifest::read(&a.manifest)?;
    check_classes(&model, &manifest)?;
    let corpus = Corpus::from_manifest(&manifest)?;
    let metrics = evaluate_graphs(&model, &corpus.graphs, &corpus.labels, a.clamp)?;
    print!("{}", metrics.report());
    print!("{}", metrics.confusion_tsv());
    if let Some(out) = &a.out {
        record_config(
            out,
            "evaluate",
            json!({
                "checkpoint": path_str(&a.checkpoint),
                "manifest": path_str(&a.manifest),
                "clamp": a.clamp,
            }),
        )?;
        write_file(&out.join("metrics.tsv"), &metrics.report())?;
        write_file(&out.join("confusion.tsv"), &metrics.confusion_tsv())?;
    }
    Ok(())
}

fn cmd_classify(a: ClassifyArgs) -> CmdResult {
    let model = load_checkpoint(&a.checkpoint)?;
    let pattern = CooPattern::read_file(&a.pattern)?;
    let graph = coo_to_graph(&pattern)?;
    let probs = predict_proba(&model, &[&graph], a.clamp)?;
    let mut ranked: Vec<(usize, f64)> = probs.row(0).iter().copied().enumerate().collect();
    ranked.sort_by(|x, y| y.1.total_cmp(&x.1).then(x.0.cmp(&y.0)));
    for (class, p) in ranked {
        println!("{}\t{p:.6}", model.class_names[class]);
    }
    Ok(())
}

/// First `limit` graphs of each class, in manifest order.
fn take_per_class(corpus: Corpus, limit: Option<usize>) -> (Vec<Graph>, Vec<usize>) {
    let Some(limit) = limit else {
        return (corpus.graphs, corpus.labels);
    };
    let mut taken = vec![0usize; corpus.class_names.len()];
    corpus
        .graphs
        .into_iter()
        .zip(corpus.labels)
        .filter(|&(_, l)| {
            taken[l] += 1;
            taken[l] <= limit
        })
        .unzip()
}

fn cmd_perturb(a: PerturbArgs) -> CmdResult {
    let model = load_checkpoint(&a.checkpoint)?;
    let manifest = DatasetManifest::read(&a.manifest)?;
    check_classes(&model, &manifest)?;
    let (sources, labels) = take_per_class(Corpus::from_manifest(&manifest)?, a.per_class);
    let table = robustness_table(&model, &sources, &labels, a.fraction, a.variants, a.seed)?;
    print!("{}", table.to_tsv());
    if let Some(out) = &a.out {
        record_config(
            out,
            "perturb",
            json!({
                "checkpoint": path_str(&a.checkpoint),
                "manifest": path_str(&a.manifest),
                "fraction": a.fraction,
                "variants": a.variants,
                "per_class": a.per_class,
                "seed": a.seed,
            }),
        )?;
        write_file(&out.join("robustness.tsv"), &table.to_tsv())?;
    }
    Ok(())
}

fn median(hist: &BTreeMap<usize, usize>, total: usize) -> usize {
    let mut seen = 0;
    for (&d, &c) in hist {
        seen += c;
        if 2 * seen >= total {
            return d;
        }
    }
    0
}

fn cmd_report(a: ReportArgs) -> CmdResult {
    let manifest = DatasetManifest::read(&a.manifest)?;
    record_config(
        &a.out,
        "report",
        json!({ "manifest": path_str(&a.manifest), "out": path_str(&a.out) }),
    )?;
    let mut pooled = vec![BTreeMap::<usize, usize>::new(); manifest.num_classes()];
    let mut graphs = vec![0usize; manifest.num_classes()];
    for (pattern, label) in manifest.load_patterns()? {
        let g = coo_to_graph(&pattern)?;
        for (d, c) in degree_histogram(&g) {
            *pooled[label].entry(d).or_default() += c;
        }
        graphs[label] += 1;
    }
    let mut summary = String::from("class\tgraphs\tnodes\tmean_degree\tmedian_degree\tmax_degree\n");
    for (k, name) in manifest.class_names.iter().enumerate() {
        let hist = &pooled[k];
        let nodes: usize = hist.values().sum();
        let degree_sum: usize = hist.iter().map(|(d, c)| d * c).sum();
        let mut body = String::from("degree\tcount\n");
        for (d, c) in hist {
            body.push_str(&format!("{d}\t{c}\n"));
        }
        write_file(&a.out.join(format!("degree_hist_{name}.tsv")), &body)?;
        summary.push_str(&format!(
            "{name}\t{}\t{nodes}\t{:.4}\t{}\t{}\n",
            graphs[k],
            degree_sum as f64 / nodes.max(1) as f64,
            median(hist, nodes),
            hist.keys().next_back().copied().unwrap_or(0)
        ));
    }
    write_file(&a.out.join("degree_summary.tsv"), &summary)?;
    print!("{summary}");
    Ok(())
}

fn cmd_gradcheck(a: GradcheckArgs) -> CmdResult {
    if a.tolerance.is_nan() || a.tolerance < 0.0 || a.step.is_nan() || a.step <= 0.0 {
        return Err(Error::invalid("--tolerance must be non-negative and --step positive").into());
    }
    // generated check graphs stay far below this bound
    let encoder = a.encoder.resolve(|| Ok(64))?;
    let (model, batch) = random_problem(a.seed, encoder)?;
    let report = grad_check(&model, &batch, a.step, a.tolerance)?;
    for p in &report.params {
        println!(
            "{}\tmax_rel_error {:.3e}\tchecked {}\tskipped {}",
            p.name, p.max_rel_error, p.checked, p.skipped_kinks
        );
    }
    let verdict = if report.passed() { "PASS" } else { "FAIL" };
    println!(
        "{verdict}: max relative error {:.3e}, tolerance {:.1e}",
        report.max_rel_error(),
        a.tolerance
    );
    if let Some(out) = &a.out {
        record_config(
            out,
            "gradcheck",
            json!({
                "seed": a.seed,
                "tolerance": a.tolerance,
                "step": a.step,
                "encoder": serde_json::to_value(encoder).expect("encoder serializes"),
            }),
        )?;
    }
    if report.passed() {
        Ok(())
    } else {
        Err(Failure::Check(format!(
            "max relative error {:.3e} exceeds {:.1e}",
            report.max_rel_error(),
            a.tolerance
        )))
    }
}
