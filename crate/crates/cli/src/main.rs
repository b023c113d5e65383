//! `cpm` — compose, marginalize, check and fit composed probabilistic models.
//!
//! Exit codes: 0 success (or check passed), 1 check returned false,
//! 2 error (parse, dominance, too large, I/O).

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use cpm_cli::bench::{run_bench, JointOutcome};
use cpm_cli::model::{parse_model, serialize_model, Model, ModelError};
use cpm_core::fixtures::binary_chain;
use cpm_core::{
    ipfp_run, is_consistent, max_abs_diff, oracle_joint, GeneratingSequence, PerfectMethod,
    Tolerance, VarId,
};

#[derive(Parser)]
#[command(name = "cpm", version, about = "Composed probabilistic models")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Write the resulting model to this file instead of standard output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Output style.
    #[arg(long, global = true, value_enum, default_value_t = Format::Human)]
    format: Format,

    /// Equality tolerance for checks and comparisons.
    #[arg(long, global = true, default_value_t = 1e-9)]
    tol: f64,

    /// Ceiling on joint table sizes, in entries.
    #[arg(long, global = true, default_value_t = 1u64 << 24)]
    max_entries: u64,

    /// Rescale dist blocks to sum exactly 1 on load.
    #[arg(long, global = true)]
    renormalize: bool,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Human,
    Summary,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Method {
    Def,
    Marginals,
    Both,
}

impl From<Method> for PerfectMethod {
    fn from(m: Method) -> Self {
        match m {
            Method::Def => PerfectMethod::Definition,
            Method::Marginals => PerfectMethod::Marginals,
            Method::Both => PerfectMethod::Both,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Compose the full joint by the right-composition chain.
    Joint { file: PathBuf },
    /// Eliminate variables from the sequence locally.
    Eliminate {
        file: PathBuf,
        /// Variable to eliminate; repeatable, applied in the given order.
        #[arg(long = "var", required = true)]
        vars: Vec<String>,
        /// Keep the residual factor that reconstructs the original joint
        /// (single-variable elimination only).
        #[arg(long)]
        keep_residual: bool,
        /// Skip variables that occur in no factor instead of failing.
        #[arg(long)]
        ignore_missing: bool,
    },
    /// Pairwise consistency check, optionally with a perfectness check.
    Check {
        file: PathBuf,
        #[arg(long)]
        perfect: bool,
        #[arg(long, value_enum, default_value_t = Method::Both)]
        method: Method,
    },
    /// Compare the operator chain against the brute-force oracle.
    Oracle {
        file: PathBuf,
        /// Also eliminate this variable and compare against the oracle marginal.
        #[arg(long)]
        eliminate: Option<String>,
    },
    /// Iterative proportional fitting over the union scope.
    Ipfp {
        file: PathBuf,
        #[arg(long, default_value_t = 500)]
        max_cycles: usize,
    },
    /// Locality benchmark: local elimination vs materializing the joint.
    Bench {
        /// Model file; a random binary chain is generated when omitted.
        file: Option<PathBuf>,
        #[arg(long, default_value_t = 26)]
        chain_len: usize,
        #[arg(long, default_value_t = 900)]
        seed: u64,
        /// Variable to eliminate; defaults to the middle chain variable.
        #[arg(long)]
        var: Option<String>,
    },
}

#[derive(Debug)]
enum AppError {
    Model(ModelError),
    Core(cpm_core::Error),
    Io(std::io::Error),
    UnknownVariable(String),
}

impl std::fmt::Display for AppError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            AppError::Model(e) => write!(f, "{e}"),
            AppError::Core(e) => write!(f, "{e}"),
            AppError::Io(e) => write!(f, "{e}"),
            AppError::UnknownVariable(name) => write!(f, "unknown variable {name:?}"),
        }
    }
}

impl From<ModelError> for AppError {
    fn from(e: ModelError) -> Self {
        AppError::Model(e)
    }
}
impl From<cpm_core::Error> for AppError {
    fn from(e: cpm_core::Error) -> Self {
        AppError::Core(e)
    }
}
impl From<std::io::Error> for AppError {
    fn from(e: std::io::Error) -> Self {
        AppError::Io(e)
    }
}

fn load(path: &PathBuf, renormalize: bool) -> Result<Model, AppError> {
    let text = fs::read_to_string(path)?;
    Ok(parse_model(&text, renormalize)?)
}

fn resolve(model: &Model, name: &str) -> Result<VarId, AppError> {
    model
        .registry
        .lookup(name)
        .ok_or_else(|| AppError::UnknownVariable(name.to_string()))
}

fn emit_model(out: &Option<PathBuf>, model: &Model, to_stdout: bool) -> Result<(), AppError> {
    let text = serialize_model(model);
    match out {
        Some(path) => fs::write(path, text)?,
        None if to_stdout => print!("{text}"),
        None => {}
    }
    Ok(())
}

fn run(cli: Cli) -> Result<u8, AppError> {
    let tolerance = Tolerance { eq_tol: cli.tol, norm_tol: 1e-9 };
    match cli.command {
        Command::Joint { file } => {
            let model = load(&file, cli.renormalize)?;
            model.seq.ensure_within(cli.max_entries)?;
            let joint = model.seq.compose_right()?;
            let sum: f64 = joint.values().iter().sum();
            let entries = joint.len();
            let out_model = Model {
                registry: model.registry.clone(),
                names: vec!["joint".to_string()],
                seq: GeneratingSequence::new(vec![joint], model.registry)?,
            };
            match cli.format {
                Format::Human => emit_model(&cli.out, &out_model, true)?,
                Format::Summary => {
                    println!("entries={entries}");
                    println!("sum={sum:.17e}");
                    emit_model(&cli.out, &out_model, false)?;
                }
            }
            Ok(0)
        }
        Command::Eliminate { file, vars, keep_residual, ignore_missing } => {
            let model = load(&file, cli.renormalize)?;
            let ids: Vec<VarId> = if ignore_missing {
                vars.iter()
                    .filter_map(|n| model.registry.lookup(n))
                    .collect()
            } else {
                vars.iter()
                    .map(|n| resolve(&model, n))
                    .collect::<Result<_, _>>()?
            };
            let result = if ids.len() == 1 {
                model.seq.eliminate_variable(ids[0], keep_residual)?
            } else {
                model.seq.eliminate_variables(&ids, ignore_missing)?
            };
            let mut names = model.names.clone();
            let mut factors = result.reduced.factors().to_vec();
            if let Some(residual) = result.residual {
                factors.push(residual);
                names.push("residual".to_string());
            }
            let out_model = Model {
                registry: model.registry.clone(),
                names,
                seq: GeneratingSequence::new(factors, model.registry)?,
            };
            match cli.format {
                Format::Human => emit_model(&cli.out, &out_model, true)?,
                Format::Summary => {
                    println!("peak_entries={}", result.stats.peak_entries);
                    println!("factors_touched={}", result.stats.factors_touched);
                    emit_model(&cli.out, &out_model, false)?;
                }
            }
            Ok(0)
        }
        Command::Check { file, perfect, method } => {
            let model = load(&file, cli.renormalize)?;
            let factors = model.seq.factors();
            let mut pairwise_ok = true;
            let mut worst = 0.0f64;
            for i in 0..factors.len() {
                for j in i + 1..factors.len() {
                    let shared = factors[i].scope().intersect(factors[j].scope());
                    let d = max_abs_diff(
                        &factors[i].marginal(&shared),
                        &factors[j].marginal(&shared),
                    )?;
                    worst = worst.max(d);
                    if !is_consistent(&factors[i], &factors[j], &tolerance)? {
                        pairwise_ok = false;
                        if cli.format == Format::Human {
                            println!(
                                "inconsistent pair: {} vs {} (deviation {d:.3e})",
                                model.names[i], model.names[j]
                            );
                        }
                    }
                }
            }
            let mut verdict = pairwise_ok;
            let mut failing_index = None;
            if perfect {
                let report =
                    model
                        .seq
                        .is_perfect(method.into(), &tolerance, cli.max_entries)?;
                worst = worst.max(report.worst_deviation);
                failing_index = report.failing_index;
                verdict = verdict && report.verdict;
                if cli.format == Format::Human {
                    println!(
                        "perfect={} worst_deviation={:.3e}",
                        report.verdict, report.worst_deviation
                    );
                }
            }
            match cli.format {
                Format::Human => println!("verdict={verdict}"),
                Format::Summary => {
                    println!("verdict={verdict}");
                    println!("worst_deviation={worst:.17e}");
                    if let Some(k) = failing_index {
                        println!("failing_index={k}");
                    }
                }
            }
            Ok(if verdict { 0 } else { 1 })
        }
        Command::Oracle { file, eliminate } => {
            let model = load(&file, cli.renormalize)?;
            model.seq.ensure_within(cli.max_entries)?;
            let truth = oracle_joint(&model.seq)?;
            let diff = match eliminate {
                Some(name) => {
                    let v = resolve(&model, &name)?;
                    let reduced = model.seq.eliminate_variable(v, false)?.reduced;
                    max_abs_diff(&reduced.compose_right()?, &truth.marginalize_out(v)?)?
                }
                None => max_abs_diff(&model.seq.compose_right()?, &truth)?,
            };
            match cli.format {
                Format::Human => println!("max abs deviation from oracle: {diff:.3e}"),
                Format::Summary => println!("max_abs_diff={diff:.17e}"),
            }
            Ok(if diff <= cli.tol { 0 } else { 1 })
        }
        Command::Ipfp { file, max_cycles } => {
            let model = load(&file, cli.renormalize)?;
            let run = ipfp_run(&model.seq, max_cycles, cli.tol, cli.max_entries)?;
            let last = run.per_cycle_change.last().copied().unwrap_or(0.0);
            match cli.format {
                Format::Human => println!(
                    "converged={} cycles_used={} last_change={last:.3e}",
                    run.converged, run.cycles_used
                ),
                Format::Summary => {
                    println!("converged={}", run.converged);
                    println!("cycles_used={}", run.cycles_used);
                    println!("last_change={last:.17e}");
                }
            }
            let out_model = Model {
                registry: model.registry.clone(),
                names: vec!["ipfp".to_string()],
                seq: GeneratingSequence::new(vec![run.result], model.registry)?,
            };
            emit_model(&cli.out, &out_model, false)?;
            Ok(if run.converged { 0 } else { 1 })
        }
        Command::Bench { file, chain_len, seed, var } => {
            let seq = match file {
                Some(path) => load(&path, cli.renormalize)?.seq,
                None => binary_chain(seed, chain_len),
            };
            let v = match var {
                Some(name) => seq
                    .registry()
                    .lookup(&name)
                    .ok_or(AppError::UnknownVariable(name))?,
                None => VarId(seq.registry().len() / 2),
            };
            let report = run_bench(&seq, v, cli.max_entries)?;
            match cli.format {
                Format::Human => {
                    println!(
                        "model: {} factors, union scope {} entries",
                        report.factors, report.union_entries
                    );
                    println!(
                        "eliminate {}: {:.3} ms, peak table {} entries",
                        report.eliminated, report.eliminate_millis, report.peak_entries
                    );
                    match report.joint {
                        JointOutcome::Ran { millis, entries } => {
                            println!("joint: {millis:.3} ms, {entries} entries")
                        }
                        JointOutcome::Refused { entries, limit } => println!(
                            "joint: refused, {entries} entries exceeds the {limit}-entry ceiling"
                        ),
                    }
                    if let Some(delta) = report.oracle_delta {
                        println!("oracle delta: {delta:.3e}");
                    }
                }
                Format::Summary => {
                    println!("eliminate_ms={:.6}", report.eliminate_millis);
                    println!("peak_entries={}", report.peak_entries);
                    match report.joint {
                        JointOutcome::Ran { millis, .. } => println!("joint_ms={millis:.6}"),
                        JointOutcome::Refused { .. } => println!("joint=refused"),
                    }
                    if let Some(delta) = report.oracle_delta {
                        println!("oracle_delta={delta:.17e}");
                    }
                }
            }
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
