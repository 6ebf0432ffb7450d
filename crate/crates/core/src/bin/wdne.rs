use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Deserialize;

use wdne::dataset::{class_histogram, load_csv, waveform, write_csv, DataTable, Schema};
use wdne::experiment::{emit_csv, run_experiment, DatasetTag, ExperimentConfig};
use wdne::{
    covariance, eigen_sym, negative_weights, positive_weights, ActiveConfig, MlpConfig,
    NormalizationMode, NormalizationModel, Result, WdneError,
};

#[derive(Parser)]
#[command(name = "wdne", version, about = "Eigenvalue-weighted PCA normalization workbench")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the four-representation active-learning comparison on a dataset.
    Run(RunArgs),
    /// Fit a representation on a table and write the transformed table.
    Transform {
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        schema: PathBuf,
        #[arg(long, default_value = "wdne+")]
        mode: String,
        /// Number of leading components to keep (default: all).
        #[arg(long)]
        retain: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print a table's eigen spectrum and weight vectors.
    Inspect {
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        schema: PathBuf,
    },
    /// Generate the 40-attribute waveform+noise dataset in UCI layout.
    GenWaveform {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 5000)]
        seed: u64,
    },
}

#[derive(clap::Args)]
struct RunArgs {
    /// heart, spam, waveform or custom (custom needs --schema).
    #[arg(long)]
    dataset: Option<String>,
    #[arg(long)]
    data_dir: Option<PathBuf>,
    #[arg(long)]
    schema: Option<PathBuf>,
    /// Comma-separated subset of raw,pca,wdne+,wdne-.
    #[arg(long, value_delimiter = ',')]
    modes: Option<Vec<String>>,
    #[arg(long)]
    rounds: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    /// Comma-separated fold indices to run (default: all ten).
    #[arg(long, value_delimiter = ',')]
    folds: Option<Vec<usize>>,
    #[arg(long)]
    jobs: Option<usize>,
    /// JSON file with the same keys as the flags, plus optional `active` and `mlp` objects.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Feed features to PCA and the networks without z-scoring them first.
    #[arg(long)]
    no_standardize: bool,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RunFile {
    dataset: Option<String>,
    data_dir: Option<PathBuf>,
    schema: Option<PathBuf>,
    modes: Option<Vec<String>>,
    rounds: Option<usize>,
    seeds: Option<Vec<u64>>,
    folds: Option<Vec<usize>>,
    jobs: Option<usize>,
    out: Option<PathBuf>,
    standardize: Option<bool>,
    active: Option<ActiveConfig>,
    mlp: Option<MlpConfig>,
}

fn read_run_file(path: &Path) -> Result<RunFile> {
    let text = fs::read_to_string(path).map_err(|e| WdneError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| WdneError::Config(format!("{}: {e}", path.display())))
}

fn resolve_run(args: RunArgs) -> Result<(ExperimentConfig, PathBuf)> {
    let file = match &args.config {
        Some(p) => read_run_file(p)?,
        None => RunFile::default(),
    };
    let dataset: DatasetTag = args
        .dataset
        .or(file.dataset)
        .ok_or_else(|| WdneError::Config("--dataset is required".into()))?
        .parse()?;
    let data_dir = args.data_dir.or(file.data_dir).unwrap_or_else(|| PathBuf::from("data"));
    let out = args
        .out
        .or(file.out)
        .ok_or_else(|| WdneError::Config("--out is required".into()))?;

    let mut config = ExperimentConfig::preset(dataset, data_dir);
    config.schema = args.schema.or(file.schema);
    if let Some(active) = file.active {
        config.active = active;
    }
    if let Some(mlp) = file.mlp {
        config.mlp = mlp;
    }
    if let Some(modes) = args.modes.or(file.modes) {
        config.representations = modes
            .iter()
            .map(|m| m.parse())
            .collect::<Result<Vec<NormalizationMode>>>()?;
    }
    if let Some(rounds) = args.rounds.or(file.rounds) {
        config.active.rounds = rounds;
    }
    if let Some(seeds) = args.seeds.or(file.seeds) {
        config.seeds = seeds;
    }
    if let Some(folds) = args.folds.or(file.folds) {
        config.folds = Some(folds);
    }
    if args.no_standardize {
        config.standardize = false;
    } else if let Some(z) = file.standardize {
        config.standardize = z;
    }
    if let Some(jobs) = args.jobs.or(file.jobs) {
        config.jobs = jobs;
    }
    config.validate()?;
    Ok((config, out))
}

fn run(args: RunArgs) -> Result<()> {
    let (config, out) = resolve_run(args)?;
    let report = run_experiment(&config)?;
    emit_csv(&report, &out)?;

    println!(
        "{}: {} examples, {} features, {} runs in {:.1}s",
        report.dataset,
        report.examples,
        report.features,
        report.runs.len(),
        report.timings.total_seconds
    );
    for curve in &report.curves {
        if let Some(p) = curve.points.last() {
            println!(
                "  {:<6} labeled={:<4} accuracy={:.4} ± {:.4}",
                curve.representation.tag(),
                p.labeled_count,
                p.accuracy_mean,
                p.accuracy_std
            );
        }
    }
    for run in report.runs.iter().filter(|r| !r.warnings.is_empty()) {
        for w in &run.warnings {
            eprintln!("warning: {} fold {} seed {}: {w}", run.representation, run.fold, run.seed);
        }
    }
    println!("results written to {}", out.display());
    Ok(())
}

fn load_with_schema(input: Option<PathBuf>, schema: &Path) -> Result<DataTable> {
    let schema = Schema::load(schema)?;
    let path = match input {
        Some(p) => p,
        None => schema.data_path()?,
    };
    load_csv(path, &schema)
}

fn transform(input: Option<PathBuf>, schema: &Path, mode: &str, retain: Option<usize>, out: &Path) -> Result<()> {
    let table = load_with_schema(input, schema)?;
    let mode: NormalizationMode = mode.parse()?;
    let model = NormalizationModel::fit(table.features(), mode, retain)?;
    let transformed = table.with_features(model.transform_table(table.features())?)?;
    let file = fs::File::create(out).map_err(|e| WdneError::io(out, e))?;
    write_csv(&transformed, BufWriter::new(file)).map_err(|e| WdneError::io(out, e))
}

fn format_vec(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:.6e}")).collect::<Vec<_>>().join(" ")
}

fn inspect(input: Option<PathBuf>, schema: &Path) -> Result<()> {
    let table = load_with_schema(input, schema)?;
    println!("examples: {}", table.len());
    println!("features: {}", table.feature_count());
    for (name, count) in class_histogram(&table) {
        println!("class {name}: {count}");
    }
    let (_, cov) = covariance(table.features())?;
    let eig = eigen_sym(&cov)?;
    println!("eigenvalues: {}", format_vec(&eig.values));
    println!("weights wdne+: {}", format_vec(&positive_weights(&eig.values)?));
    println!("weights wdne-: {}", format_vec(&negative_weights(&eig.values)?));
    let total: f64 = eig.values.iter().sum();
    if total > 0.0 {
        let mut acc = 0.0;
        let explained: Vec<f64> = eig
            .values
            .iter()
            .map(|l| {
                acc += l;
                acc / total
            })
            .collect();
        println!("cumulative variance: {}", explained.iter().map(|x| format!("{x:.4}")).collect::<Vec<_>>().join(" "));
    }
    Ok(())
}

fn gen_waveform(out: &Path, seed: u64) -> Result<()> {
    let (features, labels) = waveform::generate(waveform::UCI_CLASS_COUNTS, seed);
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| WdneError::io(dir, e))?;
    }
    let file = fs::File::create(out).map_err(|e| WdneError::io(out, e))?;
    waveform::write_uci(&features, &labels, BufWriter::new(file)).map_err(|e| WdneError::io(out, e))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => run(args),
        Command::Transform {
            input,
            schema,
            mode,
            retain,
            out,
        } => transform(input, &schema, &mode, retain, &out),
        Command::Inspect { input, schema } => inspect(input, &schema),
        Command::GenWaveform { out, seed } => gen_waveform(&out, seed),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
