use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use dlca::config::RunConfig;
use dlca::pipeline::{self, Figure};
use dlca::selftest::run_selftest;
use dlca::{Error, Result};

#[derive(Parser)]
#[command(version, about = "Continuous homodyne eavesdropping on BB84")]
struct Cli {
    /// TOML run configuration; built-in defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides every master seed in the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate train and test photocurrents.
    Generate,
    /// Train a classifier on the generated training set.
    Train {
        #[arg(long)]
        dataset: Option<PathBuf>,
    },
    /// Evaluate the trained classifier.
    Eval {
        #[arg(long)]
        dataset: Option<PathBuf>,
    },
    /// Produce one study as CSV (and SVG).
    Sweep {
        /// qber-map, feedback-map, accuracy-theta, accuracy-window, lambda or angle-traces
        #[arg(long)]
        figure: String,
    },
    /// Collate the attack comparison table.
    Report,
    /// Run the built-in invariant checks.
    Selftest,
}

fn load_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.dataset.seed = s;
        cfg.sweep.seed = s;
        cfg.training.init_seed = dlca::rng::purpose_seed(s, "init");
        cfg.training.shuffle_seed = dlca::rng::purpose_seed(s, "shuffle");
    }
    if let Some(o) = &cli.out {
        cfg.output.dir = o.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.workers {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config(e.to_string()))?;
    }
    if let Command::Selftest = cli.command {
        let results = run_selftest();
        for r in &results {
            let tag = if r.passed { "PASS" } else { "FAIL" };
            println!("{tag} {} ({:.2?}): {}", r.name, r.elapsed, r.detail);
        }
        if results.iter().any(|r| !r.passed) {
            return Err(Error::Numerical("self-test failed".into()));
        }
        return Ok(());
    }
    let cfg = load_config(&cli)?;
    match &cli.command {
        Command::Generate => {
            for p in pipeline::cmd_generate(&cfg)? {
                println!("wrote {}", p.display());
            }
        }
        Command::Train { dataset } => {
            let ck = pipeline::cmd_train(&cfg, dataset.as_deref())?;
            println!(
                "trained {} parameters on currents of length {}",
                ck.model.n_params(),
                ck.metadata.sequence_len
            );
        }
        Command::Eval { dataset } => {
            let e = pipeline::cmd_eval(&cfg, dataset.as_deref())?;
            println!("accuracy {:.4} on {} currents", e.accuracy, e.n);
        }
        Command::Sweep { figure } => {
            let path = pipeline::cmd_sweep(&cfg, Figure::parse(figure)?)?;
            println!("wrote {}", path.display());
        }
        Command::Report => {
            for r in pipeline::cmd_report(&cfg)? {
                let f =
                    |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{:.1}%", 100.0 * x));
                println!(
                    "{:<40} QBER {:>7} (ref {:>13})  accuracy {:>7} (ref {:>6})",
                    r.scheme,
                    f(r.qber),
                    r.reference_qber,
                    f(r.accuracy),
                    r.reference_accuracy
                );
            }
        }
        Command::Selftest => unreachable!(),
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
