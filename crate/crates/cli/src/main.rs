use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use mabsel::harness::{bandit_bench, run_experiment, write_bench_csv, BenchConfig, HarnessError};
use mabsel::pool::{generate_synthetic, SyntheticConfig};
use serde::Serialize;

mod config;

use config::{parse_run_config, DataSpec};

#[derive(Debug, Parser)]
#[command(name = "mabsel", version, about = "Thompson-sampling sample selection over metadata clusters")]
struct Cli {
    /// Maximum number of repeats run at once (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a synthetic pool as CSV.
    Generate {
        /// Synthetic pool config (JSON).
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Run an experiment and write curves.csv and summary.json.
    Run {
        /// Run config (JSON).
        config: PathBuf,
    },
    /// Bandit-only regret table on Bernoulli arms, as CSV on stdout.
    Bench {
        /// Comma-separated success probabilities.
        #[arg(long, value_delimiter = ',', required = true)]
        arms: Vec<f64>,
        #[arg(long, default_value_t = 2000)]
        pulls: usize,
        #[arg(long, default_value_t = 50)]
        repeats: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0.1)]
        epsilon: f64,
    },
}

#[derive(Debug)]
enum Failure {
    /// Bad arguments or config. Exit 1.
    Config(Vec<String>),
    /// Anything that went wrong after validation. Exit 2.
    Runtime(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Runtime(e)
    }
}

impl From<HarnessError> for Failure {
    fn from(e: HarnessError) -> Self {
        match e {
            HarnessError::Config(problems) => Failure::Config(problems),
            other => Failure::Runtime(other.into()),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };

    let result = match cli.jobs {
        Some(0) => Err(Failure::Config(vec!["--jobs must be at least 1".into()])),
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(|| dispatch(cli.command)),
            Err(e) => Err(Failure::Runtime(e.into())),
        },
        None => dispatch(cli.command),
    };

    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(problems)) => {
            eprintln!("error: invalid configuration");
            for p in problems {
                eprintln!("  - {p}");
            }
            ExitCode::from(1)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(command: Command) -> Result<(), Failure> {
    match command {
        Command::Generate { config, out, seed } => cmd_generate(&config, &out, seed),
        Command::Run { config } => cmd_run(&config),
        Command::Bench {
            arms,
            pulls,
            repeats,
            seed,
            epsilon,
        } => cmd_bench(BenchConfig {
            arms,
            pulls,
            repeats,
            seed,
            epsilon,
        }),
    }
}

fn init_logging(level: log::LevelFilter) {
    let _ = env_logger::Builder::new()
        .filter_level(level)
        .parse_default_env()
        .format_timestamp(None)
        .try_init();
}

fn read_config(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Config(vec![format!("cannot read {}: {e}", path.display())]))
}

fn cmd_generate(config: &Path, out: &Path, seed: u64) -> Result<(), Failure> {
    init_logging(log::LevelFilter::Info);
    let text = read_config(config)?;
    let cfg: SyntheticConfig =
        serde_json::from_str(&text).map_err(|e| Failure::Config(vec![format!("{}: {e}", config.display())]))?;
    cfg.validate().map_err(|e| Failure::Config(vec![e.to_string()]))?;
    let pool = generate_synthetic(&cfg, seed).context("generating pool")?;
    write_atomic(out, |w| pool.write_csv(w).map_err(Into::into))?;
    log::info!("wrote {} samples to {}", pool.len(), out.display());
    Ok(())
}

#[derive(Serialize)]
struct SummaryFile<'a, T: Serialize> {
    data: &'a DataSpec,
    #[serde(flatten)]
    bundle: T,
}

fn cmd_run(path: &Path) -> Result<(), Failure> {
    let text = read_config(path)?;
    let base = path.parent().unwrap_or(Path::new("."));
    let cfg = parse_run_config(&text, base).map_err(Failure::Config)?;
    init_logging(cfg.verbosity.filter());

    let pool = cfg
        .data
        .load()
        .map_err(|e| Failure::Config(vec![format!("data: {e}")]))?;
    cfg.experiment.validate(Some(&pool))?;
    log::info!(
        "pool: {} samples, {} features; {} policies x {} repeats, budget {}",
        pool.len(),
        pool.feature_dim(),
        cfg.experiment.policies.len(),
        cfg.experiment.repeats,
        cfg.experiment.budget
    );

    let bundle = run_experiment(&pool, &cfg.experiment)?;
    for p in &bundle.policies {
        for r in &p.runs {
            for w in &r.ledger.warnings {
                log::warn!("{} seed {}: {w}", p.policy, r.seed);
            }
        }
    }

    fs::create_dir_all(&cfg.output_dir)
        .with_context(|| format!("creating {}", cfg.output_dir.display()))?;
    let curves = cfg.output_dir.join("curves.csv");
    write_atomic(&curves, |w| bundle.write_curves_csv(w).map_err(Into::into))?;
    let summary = SummaryFile {
        data: &cfg.data,
        bundle: bundle.summary(&cfg.experiment.resolved(&pool)),
    };
    let summary_path = cfg.output_dir.join("summary.json");
    write_atomic(&summary_path, |w| {
        serde_json::to_writer_pretty(&mut *w, &summary)?;
        writeln!(w)?;
        Ok(())
    })?;
    log::info!("wrote {} and {}", curves.display(), summary_path.display());

    let mut stdout = io::stdout().lock();
    writeln!(stdout, "policy\tfinal_mean_test_r2\tsd").context("writing to stdout")?;
    for p in &summary.bundle.policies {
        let fmt = |v: Option<f64>| v.map(|x| format!("{x:.4}")).unwrap_or_else(|| "-".into());
        writeln!(stdout, "{}\t{}\t{}", p.policy, fmt(p.final_mean_test), fmt(p.final_sd_test))
            .context("writing to stdout")?;
    }
    Ok(())
}

fn cmd_bench(config: BenchConfig) -> Result<(), Failure> {
    let rows = bandit_bench(&config)?;
    write_bench_csv(&rows, io::stdout().lock())?;
    Ok(())
}

/// Writes through a temporary file in the target's directory, so a failed
/// write never leaves a partial file behind.
fn write_atomic<F>(path: &Path, write: F) -> anyhow::Result<()>
where
    F: FnOnce(&mut io::BufWriter<&mut fs::File>) -> anyhow::Result<()>,
{
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).with_context(|| format!("cannot write to {}", dir.display()))?;
    {
        let mut w = io::BufWriter::new(tmp.as_file_mut());
        write(&mut w)?;
        w.flush()?;
    }
    tmp.persist(path).with_context(|| format!("cannot write {}", path.display()))?;
    Ok(())
}
