use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use mmspd::harness::{run_experiment, train_models, Experiment, ExperimentConfig, TrainOptions};

#[derive(Parser)]
#[command(name = "mmspd", version, about = "Speculative decoding benchmark harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train target and draft n-gram models from a text corpus.
    Train {
        /// Plain-text corpus, one training sequence per line.
        #[arg(long)]
        corpus: PathBuf,
        /// Directory for target.json and draft.json.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 3)]
        target_order: usize,
        #[arg(long, default_value_t = 2)]
        draft_order: usize,
        #[arg(long, default_value_t = 0.01)]
        target_alpha: f64,
        #[arg(long, default_value_t = 0.01)]
        draft_alpha: f64,
    },
    /// Run the baseline and speculative decoding over every prompt and block size.
    Run {
        #[command(flatten)]
        common: Common,
        /// Directory for report.csv and aggregate.json.
        #[arg(long)]
        out: PathBuf,
    },
    /// Print one generation with accepted, correction and bonus tokens marked.
    Trace {
        #[command(flatten)]
        common: Common,
        /// Prompt id from the dataset
        #[arg(long)]
        prompt: String,
        /// Write the trace here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Common {
    /// Experiment config (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Override the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Restrict the sweep to a single block size.
    #[arg(long)]
    gamma: Option<usize>,
}

impl Common {
    fn load(&self) -> Result<ExperimentConfig> {
        let mut cfg = ExperimentConfig::load(&self.config)?;
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(gamma) = self.gamma {
            cfg.gammas = vec![gamma];
        }
        Ok(cfg)
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train { corpus, out, target_order, draft_order, target_alpha, draft_alpha } => {
            let opts = TrainOptions { target_order, draft_order, target_alpha, draft_alpha };
            let paths = train_models(&corpus, &opts, &out).context("training failed")?;
            println!("wrote {} and {}", paths.target.display(), paths.draft.display());
        }
        Command::Run { common, out } => {
            let cfg = common.load()?;
            let report = run_experiment(&cfg, &out).context("experiment failed")?;
            for g in &report.per_gamma {
                let m = &g.metrics;
                println!(
                    "gamma={} prompts={} mean_tau={:.4} mean_mbsu={:.4} token_rate_ratio={:.4} identical_to_baseline={}",
                    m.gamma, m.prompts, m.mean_tau, m.mean_mbsu, m.token_rate_ratio, g.identical_to_baseline
                );
            }
        }
        Command::Trace { common, prompt, out } => {
            let cfg = common.load()?;
            let Some(&gamma) = cfg.gammas.first() else { bail!("config lists no gammas") };
            let experiment = Experiment::prepare(&cfg)?;
            let trace = experiment.trace(&prompt, gamma)?;
            let text = format!("{}\n{}\n", trace.annotated, trace.summary());
            match out {
                Some(path) => std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?,
                None => print!("{text}"),
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
