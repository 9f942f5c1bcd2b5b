use std::path::PathBuf;
use std::process::ExitCode;

use bnfourier::harness::{self, Experiment, ExperimentConfig, Format};
use clap::{Args, Parser};

#[derive(Parser)]
#[command(
    name = "bnfourier",
    version,
    about = "Fourier learning under bounded Bayesian networks"
)]
struct Cli {
    #[arg(value_enum)]
    experiment: Experiment,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// JSON experiment config
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// output file; defaults to <BNF_OUT_DIR>/<experiment>.<format>, else stdout
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// config override, e.g. --set km.theta=0.2 (repeatable)
    #[arg(long = "set", value_name = "KEY=VALUE")]
    sets: Vec<String>,
    /// include wall-clock times (makes output non-reproducible)
    #[arg(long)]
    timing: bool,
    #[arg(long, env = harness::OUT_DIR_ENV, hide_env_values = true)]
    out_dir: Option<PathBuf>,
}

fn run(cli: Cli) -> bnfourier::Result<bool> {
    let c = &cli.common;
    let mut cfg = match &c.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    cfg = cfg.apply_overrides(&c.sets)?;
    cfg.experiment = Some(cli.experiment);
    if c.seed.is_some() {
        cfg.seed = c.seed;
    }
    let records = harness::run(&cfg, c.jobs)?;
    let ext = match c.format {
        Format::Csv => "csv",
        Format::Json => "json",
    };
    let out = c.out.clone().or_else(|| {
        c.out_dir
            .as_ref()
            .map(|d| d.join(format!("{}.{ext}", cli.experiment.as_str())))
    });
    match out {
        Some(p) => harness::emit(&records, c.format, &p, c.timing)?,
        None => print!("{}", harness::render(&records, c.format, c.timing)?),
    }
    Ok(harness::all_pass(&records))
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
