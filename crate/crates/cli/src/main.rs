//! `fkin`: runs one experiment from a TOML config and writes CSV artifacts
//! plus a JSON manifest into the output directory.
//!
//! Exit codes: 0 success, 1 a checked bound or assertion failed, 2 the
//! configuration was rejected.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Parser, ValueEnum};
use serde_json::json;

use crate::commands::{Failure, Outcome};
use crate::config::Config;
use crate::output::Artifacts;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Command {
    Constants,
    Norms,
    Classify,
    Evolve,
    Stability,
    Limit,
    PovznerCheck,
    Dsmc,
    VerifyAll,
}

impl Command {
    fn name(self) -> String {
        self.to_possible_value().expect("no skipped variants").get_name().to_string()
    }
}

#[derive(Debug, Parser)]
#[command(name = "fkin", version, about = "Fourier-space Boltzmann experiments for Maxwellian molecules")]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    /// TOML config; defaults apply to every key it omits.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory [default: fkin-out/<command>].
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides every seed in the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; all cores when omitted.
    #[arg(long)]
    workers: Option<usize>,
    /// Dotted-key override, e.g. `--set solver.alpha=0.9`; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

fn kernel_constants(cfg: &Config) -> serde_json::Value {
    let k = match cfg.kernel.build() {
        Ok(k) => k,
        Err(e) => return json!({ "error": e.to_string() }),
    };
    let mut exps = cfg.constants.exponents.clone();
    exps.extend([cfg.solver.alpha, cfg.solver.beta]);
    exps.sort_by(f64::total_cmp);
    exps.dedup();
    exps.retain(|a| (0.0..=2.0).contains(a));
    let c = if k.is_bounded() {
        k.rate_constants(&exps).map(|c| json!(c))
    } else {
        exps.iter()
            .map(|&a| k.lambda_limit(a).map(|l| json!({ "alpha": a, "lambda": l })))
            .collect::<Result<Vec<_>, _>>()
            .map(|rows| json!({ "cutoff": null, "rows": rows }))
    };
    c.unwrap_or_else(|e| json!({ "error": e.to_string() }))
}

fn dispatch(cmd: Command, cfg: &Config, art: &mut Artifacts) -> Result<Outcome, Failure> {
    match cmd {
        Command::Constants => commands::constants(cfg, art),
        Command::Norms => commands::norms(cfg, art),
        Command::Classify => commands::classify_cmd(cfg, art),
        Command::Evolve => commands::evolve(cfg, art),
        Command::Stability => commands::stability(cfg, art),
        Command::Limit => commands::limit(cfg, art),
        Command::PovznerCheck => commands::povzner_check(cfg, art),
        Command::Dsmc => commands::dsmc(cfg, art),
        Command::VerifyAll => commands::verify_all(cfg, art),
    }
}

fn run(cli: &Cli) -> Result<bool, Failure> {
    let mut cfg = config::load(cli.config.as_deref(), &cli.overrides)?;
    if let Some(s) = cli.seed {
        cfg.set_seed(s);
    }
    if let Some(w) = cli.workers {
        if w == 0 {
            return Err(Failure::Config("--workers must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build_global()
            .map_err(|e| Failure::Run(format!("cannot start workers: {e}")))?;
    }
    let out = cli.out.clone().unwrap_or_else(|| PathBuf::from("fkin-out").join(cli.command.name()));
    let mut art = Artifacts::new(&out)?;
    let started = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let clock = Instant::now();
    log::info!("{} -> {}", cli.command.name(), out.display());
    let outcome = dispatch(cli.command, &cfg, &mut art)?;
    for n in &outcome.notes {
        log::warn!("{n}");
    }
    let manifest = json!({
        "command": cli.command.name(),
        "passed": outcome.passed,
        "versions": { "fkin": env!("CARGO_PKG_VERSION"), "fourier_kinetic": fourier_kinetic::VERSION },
        "started_unix": started,
        "wall_seconds": clock.elapsed().as_secs_f64(),
        "workers": rayon::current_num_threads(),
        "seeds": cfg.seeds(),
        "config": cfg,
        "kernel_constants": kernel_constants(&cfg),
        "summary": outcome.summary,
        "notes": outcome.notes,
        "outputs": art.files(),
    });
    art.json("manifest.json", &manifest)?;
    Ok(outcome.passed)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("fkin {}: a checked bound failed; see manifest.json", cli.command.name());
            ExitCode::from(1)
        }
        Err(Failure::Config(m)) => {
            eprintln!("fkin: configuration error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Run(m)) => {
            eprintln!("fkin: {m}");
            ExitCode::from(1)
        }
    }
}
