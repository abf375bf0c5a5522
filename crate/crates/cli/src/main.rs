//! `nonrad`: command-line driver for the exterior-energy laboratory.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod output;
#[cfg(test)]
mod schema;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{json, Map, Value};

use commands::Failure;
use config::{merge, BasisCheck, ExperimentConfig, VariantSelection};
use output::{Envelope, Sink, OUTPUT_DIR_ENV};

#[derive(Parser)]
#[command(name = "nonrad", version = output_version(), about = "Exterior energy, radiation fields and decay experiments for radial waves")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

fn output_version() -> &'static str {
    Box::leak(output::version().into_boxed_str())
}

#[derive(Args, Clone, Default)]
struct Common {
    /// JSON experiment document; flags given alongside override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (default: config `output`, then $NONRAD_OUTPUT_DIR, then `.`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Args, Clone, Default)]
struct DataArgs {
    #[arg(long)]
    d: Option<usize>,
    #[arg(long)]
    nu: Option<usize>,
    /// Exterior radius.
    #[arg(long = "R")]
    radius: Option<f64>,
    /// Position coefficients `A_{k1}`.
    #[arg(long = "A", num_args = 1.., allow_negative_numbers = true)]
    a: Option<Vec<f64>>,
    /// Velocity coefficients `B_{k2}`.
    #[arg(long = "B", num_args = 0.., allow_negative_numbers = true)]
    b: Option<Vec<f64>>,
    #[arg(long)]
    blend_order: Option<usize>,
}

impl DataArgs {
    fn patch(&self) -> Option<Value> {
        let mut m = Map::new();
        put(&mut m, "d", &self.d);
        put(&mut m, "nu", &self.nu);
        put(&mut m, "radius", &self.radius);
        put(&mut m, "a", &self.a);
        put(&mut m, "b", &self.b);
        put(&mut m, "blend_order", &self.blend_order);
        if m.is_empty() {
            return None;
        }
        m.insert("kind".into(), json!("mode"));
        Some(Value::Object(m))
    }
}

#[derive(Args, Clone, Default)]
struct SolverArgs {
    #[arg(long)]
    r_max: Option<f64>,
    #[arg(long)]
    n_r: Option<usize>,
    #[arg(long)]
    t_final: Option<f64>,
    #[arg(long)]
    cfl: Option<f64>,
    #[arg(long)]
    snapshots: Option<usize>,
    /// `leapfrog` or `rk4_mol`.
    #[arg(long)]
    scheme: Option<String>,
    /// `none`, `defocusing_quintic` or `focusing_quintic`.
    #[arg(long)]
    nonlinearity: Option<String>,
}

impl SolverArgs {
    fn patch(&self) -> Option<Value> {
        let mut m = Map::new();
        put(&mut m, "r_max", &self.r_max);
        put(&mut m, "n_r", &self.n_r);
        put(&mut m, "t_final", &self.t_final);
        put(&mut m, "cfl", &self.cfl);
        put(&mut m, "snapshots", &self.snapshots);
        put(&mut m, "scheme", &self.scheme);
        put(&mut m, "nonlinearity", &self.nonlinearity);
        (!m.is_empty()).then_some(Value::Object(m))
    }
}

fn put<T: Serialize>(m: &mut Map<String, Value>, key: &str, v: &Option<T>) {
    if let Some(v) = v {
        m.insert(key.into(), serde_json::to_value(v).expect("flag values serialize"));
    }
}

fn grid_patch(data: &DataArgs, solver: &SolverArgs) -> Map<String, Value> {
    let mut m = Map::new();
    if let Some(d) = data.patch() {
        m.insert("data".into(), d);
    }
    if let Some(s) = solver.patch() {
        m.insert("solver".into(), s);
    }
    m
}

#[derive(Subcommand)]
enum Command {
    /// Exterior basis data: exponents, series norms and decay checks.
    Basis {
        #[arg(long)]
        d: Option<usize>,
        #[arg(long)]
        nu: Option<usize>,
        #[arg(long = "R")]
        radius: Option<f64>,
        #[arg(long = "A", num_args = 1.., allow_negative_numbers = true)]
        a: Option<Vec<f64>>,
        #[arg(long = "B", num_args = 0.., allow_negative_numbers = true)]
        b: Option<Vec<f64>>,
        #[arg(long, num_args = 1..)]
        check: Option<Vec<BasisCheck>>,
        #[arg(long, num_args = 1..)]
        r1: Option<Vec<f64>>,
        #[command(flatten)]
        common: Common,
    },
    /// Evolve one mode numerically, or in closed form with `--exact`.
    Evolve {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        solver: SolverArgs,
        #[arg(long)]
        exact: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Exterior cone energy series and its limit.
    Energy {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        solver: SolverArgs,
        #[arg(long)]
        cone_radius: Option<f64>,
        #[arg(long)]
        channel: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Radiation field of radial data in three dimensions.
    Radiation {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        solver: SolverArgs,
        /// `plus` or `minus`.
        #[arg(long)]
        side: Option<String>,
        #[arg(long)]
        numeric: bool,
        #[arg(long, num_args = 1..)]
        tail_radii: Option<Vec<f64>>,
        #[command(flatten)]
        common: Common,
    },
    /// Radial quintic wave equation in three dimensions.
    Nlw {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        solver: SolverArgs,
        #[arg(long, num_args = 1..)]
        probe_radii: Option<Vec<f64>>,
        #[arg(long)]
        duhamel: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Polynomial lemma sweeps and the recursion lemma.
    Lemmas {
        #[arg(long, value_enum)]
        variant: Option<VariantSelection>,
        #[arg(long)]
        degree_max: Option<usize>,
        #[arg(long)]
        trials: Option<usize>,
        /// Recursion exponent `alpha` (enables the recursion run together with `--l`).
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        l: Option<f64>,
        #[arg(long)]
        gamma0: Option<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// Radiation, gradient and L^6 tails at geometric probe radii.
    Pipeline {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        solver: SolverArgs,
        #[arg(long)]
        probe_start: Option<f64>,
        #[arg(long)]
        probe_ratio: Option<f64>,
        #[arg(long)]
        probe_count: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Basis { .. } => "basis",
            Command::Evolve { .. } => "evolve",
            Command::Energy { .. } => "energy",
            Command::Radiation { .. } => "radiation",
            Command::Nlw { .. } => "nlw",
            Command::Lemmas { .. } => "lemmas",
            Command::Pipeline { .. } => "pipeline",
        }
    }

    fn common(&self) -> &Common {
        match self {
            Command::Basis { common, .. }
            | Command::Evolve { common, .. }
            | Command::Energy { common, .. }
            | Command::Radiation { common, .. }
            | Command::Nlw { common, .. }
            | Command::Lemmas { common, .. }
            | Command::Pipeline { common, .. } => common,
        }
    }

    /// Parameters given as flags, as a partial `params` document.
    fn patch(&self) -> Map<String, Value> {
        let mut m = Map::new();
        match self {
            Command::Basis {
                d,
                nu,
                radius,
                a,
                b,
                check,
                r1,
                ..
            } => {
                put(&mut m, "d", d);
                put(&mut m, "nu", nu);
                put(&mut m, "radius", radius);
                put(&mut m, "a", a);
                put(&mut m, "b", b);
                put(&mut m, "checks", check);
                put(&mut m, "r1", r1);
            }
            Command::Evolve {
                data, solver, exact, ..
            } => {
                m = grid_patch(data, solver);
                if *exact {
                    m.insert("exact".into(), json!(true));
                }
            }
            Command::Energy {
                data,
                solver,
                cone_radius,
                channel,
                ..
            } => {
                m = grid_patch(data, solver);
                put(&mut m, "cone_radius", cone_radius);
                if *channel {
                    m.insert("channel".into(), json!(true));
                }
            }
            Command::Radiation {
                data,
                solver,
                side,
                numeric,
                tail_radii,
                ..
            } => {
                m = grid_patch(data, solver);
                put(&mut m, "side", side);
                put(&mut m, "tail_radii", tail_radii);
                if *numeric {
                    m.insert("numeric".into(), json!(true));
                }
            }
            Command::Nlw {
                data,
                solver,
                probe_radii,
                duhamel,
                ..
            } => {
                m = grid_patch(data, solver);
                put(&mut m, "probe_radii", probe_radii);
                if *duhamel {
                    m.insert("duhamel".into(), json!(true));
                }
            }
            Command::Lemmas {
                variant,
                degree_max,
                trials,
                alpha,
                l,
                gamma0,
                ..
            } => {
                put(&mut m, "variant", variant);
                put(&mut m, "degree_max", degree_max);
                put(&mut m, "trials", trials);
                let mut rec = Map::new();
                put(&mut rec, "alpha", alpha);
                put(&mut rec, "l", l);
                put(&mut rec, "gamma0", gamma0);
                if !rec.is_empty() {
                    m.insert("recursion".into(), Value::Object(rec));
                }
            }
            Command::Pipeline {
                data,
                solver,
                probe_start,
                probe_ratio,
                probe_count,
                ..
            } => {
                m = grid_patch(data, solver);
                put(&mut m, "probe_start", probe_start);
                put(&mut m, "probe_ratio", probe_ratio);
                put(&mut m, "probe_count", probe_count);
            }
        }
        m
    }
}

fn read_document(path: &Path) -> anyhow::Result<Value> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read config file {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("config file {} is not valid JSON", path.display()))
}

fn load<T: DeserializeOwned>(cmd: &Command) -> Result<ExperimentConfig<T>, Failure> {
    let common = cmd.common();
    let mut doc = match &common.config {
        Some(path) => read_document(path)?,
        None => json!({"params": {}}),
    };
    let mut patch = json!({"params": Value::Object(cmd.patch())});
    if let Some(seed) = common.seed {
        patch["seed"] = json!(seed);
    }
    merge(&mut doc, patch);
    serde_json::from_value(doc).map_err(|e| Failure::validation(format!("invalid {} config: {e}", cmd.name())))
}

fn output_dir(common: &Common, from_config: Option<&PathBuf>) -> PathBuf {
    common
        .out
        .clone()
        .or_else(|| from_config.cloned())
        .or_else(|| std::env::var_os(OUTPUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."))
}

fn execute<T, F>(cmd: &Command, body: F) -> Result<(), Box<(PathBuf, Value, Failure)>>
where
    T: DeserializeOwned + Serialize,
    F: FnOnce(&ExperimentConfig<T>, &mut Sink) -> Result<Value, Failure>,
{
    let name = cmd.name();
    let cfg: ExperimentConfig<T> = load(cmd).map_err(|f| Box::new((output_dir(cmd.common(), None), Value::Null, f)))?;
    let dir = output_dir(cmd.common(), cfg.output.as_ref());
    let echo = serde_json::to_value(&cfg).expect("configs serialize");
    let mut sink = Sink::new(dir.clone());
    let result = body(&cfg, &mut sink).map_err(|f| Box::new((dir.clone(), echo.clone(), f)))?;
    let mut result = result;
    result["artifacts"] = sink.listing();
    let envelope = Envelope {
        version: output::version(),
        command: name,
        config: &echo,
        result,
    };
    sink.json(&format!("{name}.json"), &envelope)
        .map_err(|e| Box::new((dir.clone(), echo.clone(), Failure::from(e))))?;
    let text = serde_json::to_string_pretty(&envelope.result).expect("serializable");
    let _ = writeln!(std::io::stdout(), "{text}");
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cmd = &cli.command;
    let outcome = match cmd {
        Command::Basis { .. } => execute(cmd, commands::basis),
        Command::Evolve { .. } => execute(cmd, commands::evolve),
        Command::Energy { .. } => execute(cmd, commands::energy),
        Command::Radiation { .. } => execute(cmd, commands::radiation),
        Command::Nlw { .. } => execute(cmd, commands::nlw),
        Command::Lemmas { .. } => execute(cmd, commands::lemmas),
        Command::Pipeline { .. } => execute(cmd, commands::pipeline),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let (dir, echo, failure) = *err;
            let report = json!({
                "version": output::version(),
                "command": cmd.name(),
                "config": echo,
                "error": {
                    "exit_code": failure.code,
                    "kind": failure.kind,
                    "message": failure.message,
                    "diagnostic": failure.diagnostic,
                },
            });
            eprintln!("error: {}", failure.message);
            let path = dir.join(format!("{}.error.json", cmd.name()));
            if let Err(e) = output::json_bytes(&report).and_then(|b| output::write_atomic(&path, &b)) {
                eprintln!("error: could not write diagnostics to {}: {e:#}", path.display());
            }
            ExitCode::from(failure.code as u8)
        }
    }
}
