use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fmc_timewarp::config::ExperimentConfig;
use fmc_timewarp::data::FuelClass;
use fmc_timewarp::eval::Filter;
use fmc_timewarp::pipeline::{self, Selection};
use fmc_timewarp::transfer::TransferMethod;
use fmc_timewarp::{Error, Result};

#[derive(Parser)]
#[command(name = "fmcwarp", version, about = "Time-warping transfer learning for fuel-moisture models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the synthetic dataset.
    Synth(Common),
    /// Train the source-class realizations.
    Pretrain(Common),
    /// Adapt the pretrained realizations to the target classes.
    Transfer(Common),
    /// Score adapted models on the test period and write reports.
    Evaluate(Common),
    /// Print the summary table from existing reports.
    Report(Common),
}

#[derive(Args)]
struct Common {
    /// TOML configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Base seed (the synthetic-data seed for `synth`).
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads.
    #[arg(long)]
    jobs: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Restrict to these methods (comma-separated).
    #[arg(long, value_delimiter = ',')]
    method: Vec<String>,
    /// Restrict to these fuel classes (comma-separated).
    #[arg(long, value_delimiter = ',')]
    class: Vec<String>,
    /// Restrict to one observation filter: all or le30.
    #[arg(long)]
    filter: Option<String>,
    /// Gap policy for the input CSV: reject or hold.
    #[arg(long)]
    fill: Option<String>,
}

impl Common {
    fn config(&self, synth: bool) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::load(p)?,
            None => ExperimentConfig::default(),
        };
        if let Some(s) = self.seed {
            let key = if synth { "synth.seed" } else { "run.seed" };
            cfg.set(key, &toml::Value::Integer(s as i64))?;
        }
        if let Some(j) = self.jobs {
            cfg.set("run.jobs", &toml::Value::Integer(j as i64))?;
        }
        if let Some(o) = &self.out {
            cfg.out = o.clone();
        }
        if let Some(f) = &self.fill {
            cfg.set("data.fill", &toml::Value::String(f.clone()))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn selection(&self) -> Result<Selection> {
        let methods = self
            .method
            .iter()
            .map(|m| TransferMethod::parse(m).ok_or_else(|| Error::config(format!("unknown method {m:?}"))))
            .collect::<Result<Vec<_>>>()?;
        let classes = self
            .class
            .iter()
            .map(|c| FuelClass::parse(c).ok_or_else(|| Error::config(format!("unknown class {c:?}"))))
            .collect::<Result<Vec<_>>>()?;
        let filter = self
            .filter
            .as_deref()
            .map(|f| Filter::parse(f).ok_or_else(|| Error::config(format!("unknown filter {f:?}"))))
            .transpose()?;
        Ok(Selection {
            methods: (!methods.is_empty()).then_some(methods),
            classes: (!classes.is_empty()).then_some(classes),
            filter,
        })
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Synth(c) => {
            let path = pipeline::cmd_synth(&c.config(true)?)?;
            println!("{}", path.display());
        }
        Command::Pretrain(c) => {
            let s = pipeline::cmd_pretrain(&c.config(false)?)?;
            println!("pretrained: {} ok, {} diverged, {} failed", s.ok, s.diverged, s.failed);
        }
        Command::Transfer(c) => pipeline::cmd_transfer(&c.config(false)?, &c.selection()?)?,
        Command::Evaluate(c) => {
            let reports = pipeline::cmd_evaluate(&c.config(false)?, &c.selection()?)?;
            print!("{}", fmc_timewarp::eval::render_table(&reports));
        }
        Command::Report(c) => print!("{}", pipeline::cmd_report(&c.config(false)?, &c.selection()?)?),
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
