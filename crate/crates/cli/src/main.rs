use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use tracenorm::classifier::{predict, LinearMatrixModel};
use tracenorm::experiment::config::ExperimentConfig;
use tracenorm::experiment::dataset::{entry_seeds, load_dataset, load_entry};
use tracenorm::experiment::manifest::{Manifest, ManifestEntry, Split};
use tracenorm::experiment::robustness::{run_robustness, write_robustness};
use tracenorm::experiment::synth::{generate, SynthParams};
use tracenorm::experiment::train::{train, write_trace};
use tracenorm::linalg::text::{fmt_f64, read_matrix_file, write_matrix_file};
use tracenorm::linalg::{numerical_rank, spectral_norm};
use tracenorm::rpca::{rpca_ialm, RpcaConfig};
use tracenorm::Error;

const EXIT_OTHER: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_FORMAT: u8 = 3;
const EXIT_DIMENSION: u8 = 4;
const EXIT_NO_CONVERGENCE: u8 = 5;

#[derive(Parser)]
#[command(name = "tracenorm", version)]
#[command(about = "Trace-norm matrix classifiers, robust PCA, and experiment tooling")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Split a matrix file into low-rank A and sparse E
    Rpca {
        input: PathBuf,
        /// Sparsity weight; default 1/sqrt(max(m, n))
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(long, default_value_t = RpcaConfig::DEFAULT_TOL)]
        tol: f64,
        #[arg(long, default_value_t = RpcaConfig::DEFAULT_MAX_ITER)]
        max_iter: usize,
        /// Output directory for A.txt and E.txt
        #[arg(long)]
        out: PathBuf,
    },
    /// Train a model and write model.txt and trace.csv
    Train {
        #[arg(long)]
        manifest: PathBuf,
        #[command(flatten)]
        exp: ExperimentArgs,
        /// Output directory
        #[arg(long)]
        out: PathBuf,
    },
    /// Score the test split with a saved model
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        manifest: PathBuf,
        #[command(flatten)]
        exp: ExperimentArgs,
        /// Output CSV (path, score, predicted, true)
        #[arg(long)]
        out: PathBuf,
    },
    /// Accuracy under seven corruption conditions, plain vs RPCA features
    Robustness {
        #[arg(long)]
        manifest: PathBuf,
        #[command(flatten)]
        exp: ExperimentArgs,
        /// Output CSV
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate a two-class synthetic dataset with a manifest
    Synth {
        #[arg(long, default_value_t = 10)]
        rows: usize,
        #[arg(long, default_value_t = 8)]
        cols: usize,
        #[arg(long, default_value_t = 2)]
        rank: usize,
        #[arg(long, default_value_t = 50)]
        train_per_class: usize,
        #[arg(long, default_value_t = 50)]
        test_per_class: usize,
        #[arg(long, default_value_t = 0.1)]
        noise: f64,
        #[arg(long, default_value_t = 0.5)]
        spread: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output directory
        #[arg(long)]
        out: PathBuf,
    },
}

/// Experiment settings; flags override the config file.
#[derive(Args)]
struct ExperimentArgs {
    /// key=value config file
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    trainer: Option<String>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    eps1: Option<f64>,
    #[arg(long)]
    eps2: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    /// explicit (2mn·Σ‖X‖²) or tight (2·Σ‖X‖²)
    #[arg(long)]
    lipschitz: Option<String>,
    #[arg(long, conflicts_with = "le_fraction", allow_negative_numbers = true)]
    snr_db: Option<f64>,
    #[arg(long)]
    le_fraction: Option<f64>,
    /// raw or features
    #[arg(long)]
    corruption_domain: Option<String>,
    #[arg(long)]
    use_rpca: bool,
    #[arg(long)]
    rpca_lambda: Option<f64>,
    #[arg(long)]
    frames: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

impl ExperimentArgs {
    fn resolve(&self) -> tracenorm::Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default(),
        };
        let pairs: [(&str, Option<String>); 13] = [
            ("trainer", self.trainer.clone()),
            ("lambda", self.lambda.map(|v| v.to_string())),
            ("eps1", self.eps1.map(|v| v.to_string())),
            ("eps2", self.eps2.map(|v| v.to_string())),
            ("max_iter", self.max_iter.map(|v| v.to_string())),
            ("batch_size", self.batch_size.map(|v| v.to_string())),
            ("lipschitz", self.lipschitz.clone()),
            ("snr_db", self.snr_db.map(|v| v.to_string())),
            ("le_fraction", self.le_fraction.map(|v| v.to_string())),
            ("corruption_domain", self.corruption_domain.clone()),
            ("rpca_lambda", self.rpca_lambda.map(|v| v.to_string())),
            ("frames", self.frames.map(|v| v.to_string())),
            ("seed", self.seed.map(|v| v.to_string())),
        ];
        for (key, value) in pairs {
            if let Some(v) = value {
                cfg.set(key, &v)?;
            }
        }
        if self.use_rpca {
            cfg.use_rpca = true;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Failure with the exit code it maps to.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e.root() {
            Error::InvalidParameter(_) | Error::Empty(_) => EXIT_USAGE,
            Error::Format(_) => EXIT_FORMAT,
            Error::DimensionMismatch { .. }
            | Error::SampleDimension { .. }
            | Error::InsufficientSamples { .. }
            | Error::TooLarge { .. } => EXIT_DIMENSION,
            Error::SvdNoConvergence { .. } => EXIT_NO_CONVERGENCE,
            _ => EXIT_OTHER,
        };
        Failure { code, message: e.to_string() }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Error::from(e).into()
    }
}

type CmdResult = Result<u8, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Rpca { input, lambda, tol, max_iter, out } => cmd_rpca(&input, lambda, tol, max_iter, &out),
        Command::Train { manifest, exp, out } => cmd_train(&manifest, &exp, &out),
        Command::Predict { model, manifest, exp, out } => cmd_predict(&model, &manifest, &exp, &out),
        Command::Robustness { manifest, exp, out } => cmd_robustness(&manifest, &exp, &out),
        Command::Synth { rows, cols, rank, train_per_class, test_per_class, noise, spread, seed, out } => {
            let p = SynthParams { rows, cols, rank, train_per_class, test_per_class, noise, spread, seed };
            cmd_synth(&p, &out)
        }
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn cmd_rpca(input: &Path, lambda: Option<f64>, tol: f64, max_iter: usize, out: &Path) -> CmdResult {
    let d = read_matrix_file(input)?;
    let mut cfg = match lambda {
        Some(l) => RpcaConfig::new(l),
        None => RpcaConfig::for_shape(d.nrows(), d.ncols()),
    };
    cfg.tol = tol;
    cfg.max_iter = max_iter;
    let dec = rpca_ialm(&d.view(), &cfg)?;
    let sigma1 = spectral_norm(&dec.low_rank.view())?;
    let rank = numerical_rank(&dec.low_rank.view(), 1e-6 * sigma1)?;

    fs::create_dir_all(out)?;
    write_matrix_file(&out.join("A.txt"), &dec.low_rank)?;
    write_matrix_file(&out.join("E.txt"), &dec.sparse)?;
    println!("rank={rank}");
    println!("residual={}", fmt_f64(dec.residual));
    println!("iterations={}", dec.iterations);
    println!("converged={}", dec.converged);
    println!("lambda={}", fmt_f64(cfg.lambda));
    if dec.converged {
        Ok(0)
    } else {
        eprintln!("warning: no convergence within {max_iter} iterations");
        Ok(EXIT_NO_CONVERGENCE)
    }
}

fn cmd_train(manifest: &Path, exp: &ExperimentArgs, out: &Path) -> CmdResult {
    let cfg = exp.resolve()?;
    let manifest = Manifest::load(manifest)?;
    let data = load_dataset(&manifest, &cfg)?;
    let outcome = train(&data, &cfg)?;

    fs::create_dir_all(out)?;
    outcome.model.save(&out.join("model.txt"))?;
    let mut trace = BufWriter::new(File::create(out.join("trace.csv"))?);
    write_trace(&mut trace, &outcome.trace)?;
    trace.flush()?;
    fs::write(out.join("config.txt"), cfg.to_text())?;

    let last = outcome.trace.last();
    println!("trainer={}", cfg.trainer);
    println!("train_samples={}", data.train.len());
    println!("test_samples={}", data.test.len());
    println!("objective={}", last.map_or("nan".into(), |r| fmt_f64(r.objective)));
    println!("test_accuracy={}", last.map_or("nan".into(), |r| fmt_f64(r.test_accuracy)));
    println!("svd_calls={}", outcome.svd_calls);
    println!("converged={}", outcome.converged);
    Ok(0)
}

fn cmd_predict(model: &Path, manifest: &Path, exp: &ExperimentArgs, out: &Path) -> CmdResult {
    let cfg = exp.resolve()?;
    let model = LinearMatrixModel::load(model)?;
    let manifest = Manifest::load(manifest)?;
    let seeds = entry_seeds(cfg.seed, manifest.entries.len());
    let tests: Vec<(&ManifestEntry, u64)> =
        manifest.entries.iter().zip(seeds).filter(|(e, _)| e.split == Split::Test).collect();
    if tests.is_empty() {
        return Err(Error::Empty("test split").into());
    }

    let mut csv = String::from("path,score,predicted,true\n");
    let (mut correct, mut scored, mut failed) = (0usize, 0usize, 0usize);
    for (entry, seed) in tests {
        let pred = load_entry(&manifest, entry, &cfg, seed).and_then(|s| predict(&model, &s.x.view()));
        match pred {
            Ok(p) => {
                scored += 1;
                correct += usize::from(p.label == entry.label);
                csv.push_str(&format!(
                    "{},{},{},{}\n",
                    entry.path.display(),
                    fmt_f64(p.score),
                    p.label,
                    entry.label
                ));
            }
            Err(e) => {
                failed += 1;
                eprintln!("error: {}: {e}", entry.path.display());
            }
        }
    }
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(out, csv)?;
    let accuracy = if scored == 0 { f64::NAN } else { correct as f64 / scored as f64 };
    println!("scored={scored}");
    println!("failed={failed}");
    println!("accuracy={}", fmt_f64(accuracy));
    Ok(if failed == 0 { 0 } else { EXIT_DIMENSION })
}

fn cmd_robustness(manifest: &Path, exp: &ExperimentArgs, out: &Path) -> CmdResult {
    let cfg = exp.resolve()?;
    let manifest = Manifest::load(manifest)?;
    manifest.require_both_splits()?;
    let rows = run_robustness(&manifest, &cfg);
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let mut w = BufWriter::new(File::create(out)?);
    write_robustness(&mut w, &rows)?;
    w.flush()?;
    let failed = rows.iter().filter(|r| r.outcome.is_err()).count();
    for r in &rows {
        match &r.outcome {
            Ok(c) => println!("{}/{}: accuracy={}", r.condition.label(), r.mode.name(), fmt_f64(c.accuracy)),
            Err(e) => eprintln!("{}/{}: failed: {e}", r.condition.label(), r.mode.name()),
        }
    }
    println!("failed_cells={failed}");
    Ok(0)
}

fn cmd_synth(p: &SynthParams, out: &Path) -> CmdResult {
    let samples = generate(p)?;
    fs::create_dir_all(out)?;
    let mut entries = Vec::with_capacity(samples.len());
    for (i, s) in samples.iter().enumerate() {
        let name = format!("{}_{i:05}.txt", s.split);
        write_matrix_file(&out.join(&name), &s.sample.x)?;
        entries.push(ManifestEntry { path: name.into(), label: s.sample.y, split: s.split });
    }
    Manifest::new(entries, out).save(&out.join("manifest.csv"))?;
    println!("samples={}", samples.len());
    println!("manifest={}", out.join("manifest.csv").display());
    Ok(0)
}
