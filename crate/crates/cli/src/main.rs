use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use subgsp::experiments::{self, ExperimentConfig, GraphSource, Setup, V0Source};
use subgsp::io;
use subgsp::{Error, Result};

#[derive(Parser, Debug)]
#[command(name = "subgsp", version, about = "Signal processing on observed vertex subsets of a graph")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Experiment config (JSON), or a manifest from an earlier run to replay it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for trial-level parallelism.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Overrides the config trial count.
    #[arg(long, global = true)]
    trials: Option<usize>,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum Command {
    /// Fit (F*, F0*) and write the result and operator.
    Fit,
    /// Eigenvalues of F0* beside the main spectral set of F*.
    Spectrum,
    /// Compression error per operator.
    Compress,
    /// Anomaly detection rate per operator.
    Detect,
    /// Denoising error ratio per operator.
    Denoise,
    /// Filter learning recovery error per β.
    Learn,
    /// Kron reduction onto V0.
    Kron,
    /// Sparsify the fitted operator.
    Sparsify,
    /// Component-size statistics of random subsamples.
    Simulate,
    /// Dimension of the semi shift invariant family.
    Dim,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Fit => "fit",
            Command::Spectrum => "spectrum",
            Command::Compress => "compress",
            Command::Detect => "detect",
            Command::Denoise => "denoise",
            Command::Learn => "learn",
            Command::Kron => "kron",
            Command::Sparsify => "sparsify",
            Command::Simulate => "simulate",
            Command::Dim => "dim",
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct FileDigest {
    name: String,
    sha256: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    subcommand: Command,
    version: String,
    seed: u64,
    config_sha256: String,
    config: ExperimentConfig,
    files: Vec<FileDigest>,
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Resolves relative paths against the config's directory.
fn absolutize(cfg: &mut ExperimentConfig, base: &Path) {
    let fix = |p: &mut PathBuf| {
        if p.is_relative() {
            *p = base.join(&*p);
        }
    };
    if let GraphSource::File { path } = &mut cfg.graph {
        fix(path);
    }
    if let V0Source::File { path } = &mut cfg.v0 {
        fix(path);
    }
}

fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    let value: serde_json::Value = serde_json::from_str(&text)?;
    let mut cfg: ExperimentConfig = if value.get("config_sha256").is_some() {
        serde_json::from_value::<Manifest>(value)?.config
    } else {
        serde_json::from_value(value).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?
    };
    absolutize(&mut cfg, path.parent().unwrap_or(Path::new(".")));
    Ok(cfg)
}

struct Outputs {
    dir: PathBuf,
    written: Vec<String>,
}

impl Outputs {
    fn path(&mut self, name: &str) -> PathBuf {
        self.written.push(name.to_string());
        self.dir.join(name)
    }
}

fn run(cli: &Cli) -> Result<()> {
    let cfg_path = cli.config.as_ref().ok_or_else(|| Error::Config("--config is required".into()))?;
    let mut cfg = load_config(cfg_path)?;
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(t) = cli.trials {
        cfg.trials = t;
    }
    cfg.validate()?;
    if let Some(j) = cli.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(j.max(1))
            .build_global()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    }
    fs::create_dir_all(&cli.out)?;
    let mut out = Outputs { dir: cli.out.clone(), written: Vec::new() };
    log::info!("{} with seed {} and {} trial(s)", cli.command.name(), cfg.seed, cfg.trials);

    match cli.command {
        Command::Fit => {
            let setup = Setup::new(&cfg, 0)?;
            let fit = setup.fit(&cfg)?;
            io::write_operator(&fit.operator, &out.path("operator.csv"))?;
            out.written.push("operator.json".into());
            io::write_json(&out.path("fit.json"), &fit)?;
            println!("loss = {:e}", fit.loss);
            println!("converged = {}", fit.info.converged);
        }
        Command::Spectrum => {
            let r = experiments::run_spectrum(&cfg)?;
            io::write_rows(&r.spectrum, &out.path("spectrum.csv"))?;
            io::write_rows(&r.structure, &out.path("structure.csv"))?;
            io::write_rows(&r.summary, &out.path("summary.csv"))?;
        }
        Command::Compress | Command::Detect | Command::Denoise | Command::Learn => {
            let r = match cli.command {
                Command::Compress => experiments::run_compress(&cfg)?,
                Command::Detect => experiments::run_detect(&cfg)?,
                Command::Denoise => experiments::run_denoise(&cfg)?,
                _ => experiments::run_learn(&cfg)?,
            };
            io::write_rows(&r.rows, &out.path("trials.csv"))?;
            io::write_rows(&r.summary, &out.path("summary.csv"))?;
            for s in &r.summary {
                println!("{},{},{:.6},{:.6},{}", s.operator, s.param, s.mean, s.stderr, s.trials);
            }
        }
        Command::Kron => {
            let setup = Setup::new(&cfg, 0)?;
            io::write_operator(&setup.kron()?, &out.path("kron.csv"))?;
            out.written.push("kron.json".into());
        }
        Command::Sparsify => {
            let (op, report) = experiments::run_sparsify(&cfg)?;
            io::write_operator(&op, &out.path("sparsified.csv"))?;
            out.written.push("sparsified.json".into());
            io::write_json(&out.path("sparsify_report.json"), &report)?;
            println!("nonzero pairs {} -> {}, eps check {}", report.nonzero_before, report.nonzero_after, report.eps_check);
        }
        Command::Simulate => {
            let r = experiments::run_simulate(&cfg)?;
            io::write_rows(&r.histogram, &out.path("histogram.csv"))?;
            io::write_rows(&r.summary, &out.path("summary.csv"))?;
        }
        Command::Dim => {
            let r = experiments::run_dim(&cfg)?;
            io::write_json(&out.path("dim.json"), &r)?;
            println!("dimension = {} (essential formula {})", r.dimension, r.essential_formula);
        }
    }

    let cfg_json = serde_json::to_string_pretty(&cfg)?;
    fs::write(out.path("config.json"), format!("{cfg_json}\n"))?;
    let mut files = Vec::new();
    let mut names = out.written.clone();
    names.sort();
    names.dedup();
    for name in names {
        files.push(FileDigest { sha256: sha256_hex(&fs::read(out.dir.join(&name))?), name });
    }
    let manifest = Manifest {
        subcommand: cli.command,
        version: env!("CARGO_PKG_VERSION").to_string(),
        seed: cfg.seed,
        config_sha256: sha256_hex(cfg_json.as_bytes()),
        config: cfg,
        files,
    };
    io::write_json(&cli.out.join("manifest.json"), &manifest)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("SUBGSP_LOG", "warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.name());
            ExitCode::from(if e.is_config() { 2 } else { 3 })
        }
    }
}
