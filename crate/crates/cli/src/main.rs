mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;
use rayon::prelude::*;
use serde_json::{json, Value};

use commands::{Command, Context};
use config::{config_hash, derive_seed, RunConfig, Sweep};
use output::{numbered, Staging};

/// Reproducible spin-wave emission experiments. Writes CSV tables and a JSON
/// metadata record per run into the output directory.
#[derive(Debug, Parser)]
#[command(name = "spinwave", version)]
struct Cli {
    command: Command,
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Parameter sweep `key=v1,v2,...` over a dotted config key.
    #[arg(long)]
    sweep: Option<String>,
}

#[derive(Debug)]
pub enum Failure {
    Config(String),
    Numeric(String),
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Config(_) => 2,
            Failure::Numeric(_) => 3,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Config(m) => write!(f, "config error: {m}"),
            Failure::Numeric(m) => write!(f, "numeric failure: {m}"),
        }
    }
}

impl From<spinwave::Error> for Failure {
    fn from(e: spinwave::Error) -> Self {
        use spinwave::Error as E;
        match e {
            E::Quadrature { .. } | E::StepSizeCollapse { .. } | E::Degenerate(_) | E::DivergentPhase(..) => {
                Failure::Numeric(e.to_string())
            }
            _ => Failure::Config(e.to_string()),
        }
    }
}

struct Point {
    index: Option<usize>,
    value: Value,
    config: RunConfig,
    sweep: Value,
}

fn plan(base: &Value, sweep: Option<&Sweep>) -> Result<Vec<Point>, Failure> {
    let Some(sweep) = sweep else {
        let config = RunConfig::from_value(base.clone())?;
        return Ok(vec![Point { index: None, value: base.clone(), config, sweep: Value::Null }]);
    };
    let base_seed = base
        .get("seed")
        .and_then(Value::as_u64)
        .ok_or_else(|| Failure::Config("missing or invalid `seed`".into()))?;
    (0..sweep.values.len())
        .map(|i| {
            let mut value = sweep.apply(base, i)?;
            let seed = if sweep.key == "seed" {
                value["seed"].as_u64().ok_or_else(|| Failure::Config("swept seeds must be non-negative integers".into()))?
            } else {
                let s = derive_seed(base_seed, i);
                value["seed"] = json!(s);
                s
            };
            let config = RunConfig::from_value(value.clone())?;
            let meta = json!({ "key": sweep.key, "value": sweep.values[i], "index": i, "seed": seed });
            Ok(Point { index: Some(i), value, config, sweep: meta })
        })
        .collect()
}

fn run_point(cli: &Cli, p: &Point) -> Result<Staging, Failure> {
    let start = Instant::now();
    let mut staging = Staging::new(&cli.out)?;
    let mut ctx = Context { staging: &mut staging, index: p.index };
    let result = commands::run(cli.command, &p.config, &mut ctx)?;
    let meta = json!({
        "command": cli.command.name(),
        "code_version": env!("CARGO_PKG_VERSION"),
        "config_sha256": config_hash(&p.value),
        "config": p.value,
        "seed": p.config.seed,
        "sweep": p.sweep,
        "result": result,
        "wall_time_s": start.elapsed().as_secs_f64(),
    });
    staging.write_json(&numbered(&format!("{}.json", cli.command.name()), p.index), &meta)?;
    Ok(staging)
}

fn execute(cli: &Cli) -> Result<(), Failure> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Failure::Config("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Config(format!("cannot set up {n} threads: {e}")))?;
    }
    let text = std::fs::read_to_string(&cli.config)
        .map_err(|e| Failure::Config(format!("cannot read {}: {e}", cli.config.display())))?;
    let base: Value = serde_json::from_str(&text).map_err(|e| Failure::Config(format!("config is not valid JSON: {e}")))?;
    if !base.is_object() {
        return Err(Failure::Config("config must be a JSON object".into()));
    }
    let sweep = cli.sweep.as_deref().map(Sweep::parse).transpose()?;
    let points = plan(&base, sweep.as_ref())?;
    let staged = points.par_iter().map(|p| run_point(cli, p)).collect::<Result<Vec<_>, _>>()?;
    for s in staged {
        for path in s.commit()? {
            log::info!("wrote {}", path.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("spinwave: {f}");
            ExitCode::from(f.exit_code())
        }
    }
}
