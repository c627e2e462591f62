//! Command-line front end: instance files, solving, lower-bound reports,
//! simulation batches and validation against the brute-force reference.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::GlError;
use crate::glpg::{self, GLOutput, SolveOptions};
use crate::instance::{self, DiscretizationCheck, Theta};
use crate::reference::{self, BRUTE_FORCE_CAP};
use crate::simulator::{self, Algorithm, Experiment, OssbConfig};
use crate::structures::{Decision, DecisionSet, DEFAULT_ENUM_CAP};

/// Environment variable overriding the enumeration cap.
pub const ENUM_CAP_VAR: &str = "GLKIT_ENUM_CAP";

/// Largest certified violation accepted by `validate`.
pub const VIOLATION_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("bad input: {0}")]
    BadInput(String),
    #[error("solver failure: {0}")]
    Solver(#[from] GlError),
    #[error("validation failed: {0}")]
    Validation(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::BadInput(_) => 2,
            CliError::Solver(_) => 3,
            CliError::Validation(_) => 4,
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// Structure part of an instance file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum StructureSpec {
    Mset { d: usize, m: usize },
    PathDag { nodes: usize, edges: Vec<(usize, usize)>, source: usize, sink: usize },
    BipartiteMatching {
        left: usize,
        right: usize,
        edges: Vec<(usize, usize)>,
        #[serde(default)]
        perfect: bool,
    },
    Explicit { decisions: Vec<Vec<u8>> },
}

impl StructureSpec {
    pub fn build(&self) -> crate::Result<DecisionSet> {
        match self {
            StructureSpec::Mset { d, m } => DecisionSet::mset(*d, *m),
            StructureSpec::PathDag { nodes, edges, source, sink } => DecisionSet::path_dag(*nodes, edges.clone(), *source, *sink),
            StructureSpec::BipartiteMatching { left, right, edges, perfect } => {
                DecisionSet::matching(*left, *right, edges.clone(), *perfect)
            }
            StructureSpec::Explicit { decisions } => DecisionSet::explicit(decisions.clone()),
        }
    }
}

/// JSON instance file: a structure and either an integer `theta` or a real
/// `theta_real` with its discretization step.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub instance_id: Option<String>,
    pub structure: StructureSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<Vec<u64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta_real: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
}

/// Mean rewards of a loaded instance.
#[derive(Clone, Debug, PartialEq)]
pub enum ThetaSpec {
    Integer(Theta),
    Real { values: Vec<f64>, epsilon: f64 },
}

impl ThetaSpec {
    pub fn as_f64(&self) -> Vec<f64> {
        match self {
            ThetaSpec::Integer(t) => t.as_f64(),
            ThetaSpec::Real { values, .. } => values.clone(),
        }
    }
}

/// A validated instance.
#[derive(Clone, Debug)]
pub struct Instance {
    pub id: String,
    pub set: DecisionSet,
    pub theta: ThetaSpec,
}

impl InstanceFile {
    pub fn into_instance(self, fallback_id: &str) -> CliResult<Instance> {
        let set = self.structure.build().map_err(|e| CliError::BadInput(e.to_string()))?;
        let theta = match (self.theta, self.theta_real, self.epsilon) {
            (Some(t), None, None) => ThetaSpec::Integer(Theta::new(t).map_err(|e| CliError::BadInput(e.to_string()))?),
            (None, Some(values), Some(epsilon)) => {
                if let Some((index, &value)) = values.iter().enumerate().find(|(_, v)| !(**v > 0.0 && v.is_finite())) {
                    return Err(CliError::BadInput(GlError::NonPositiveEntry { index, value }.to_string()));
                }
                if !(epsilon > 0.0 && epsilon.is_finite()) {
                    return Err(CliError::BadInput(format!("epsilon must be positive, got {epsilon}")));
                }
                ThetaSpec::Real { values, epsilon }
            }
            (None, Some(_), None) => return Err(CliError::BadInput("theta_real requires epsilon".into())),
            _ => return Err(CliError::BadInput("give exactly one of theta or theta_real (with epsilon)".into())),
        };
        let dim = match &theta {
            ThetaSpec::Integer(t) => t.dim(),
            ThetaSpec::Real { values, .. } => values.len(),
        };
        if dim != set.dim() {
            return Err(CliError::BadInput(GlError::DimensionMismatch { expected: set.dim(), actual: dim }.to_string()));
        }
        Ok(Instance { id: self.instance_id.unwrap_or_else(|| fallback_id.to_string()), set, theta })
    }
}

pub fn load_instance(path: &Path) -> CliResult<Instance> {
    let text = fs::read_to_string(path).map_err(|e| CliError::BadInput(format!("cannot read {}: {e}", path.display())))?;
    let file: InstanceFile =
        serde_json::from_str(&text).map_err(|e| CliError::BadInput(format!("{}: {e}", path.display())))?;
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("instance");
    file.into_instance(stem)
}

/// Discretization details stored with solutions of real-valued instances.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscretizationInfo {
    pub discretized: Theta,
    pub check: DiscretizationCheck,
    pub inflation: f64,
}

/// JSON written by `solve`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolutionFile {
    pub instance_id: String,
    pub delta: f64,
    #[serde(flatten)]
    pub output: GLOutput,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub discretization: Option<DiscretizationInfo>,
}

#[derive(Debug, Parser)]
#[command(name = "glkit", version, about = "Graves-Lai lower bounds for combinatorial semi-bandits")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve the lower-bound program with GLPG and write the allocation.
    Solve(SolveArgs),
    /// Print the GLPG objective next to the brute-force value.
    Lowerbound(SolverArgs),
    /// Run bandit policies and write regret checkpoints as CSV.
    Simulate(SimulateArgs),
    /// Cross-check GLPG (or a stored solution) against the brute force.
    Validate(ValidateArgs),
}

#[derive(Debug, Clone, Args)]
pub struct SolverArgs {
    #[arg(long)]
    pub instance: PathBuf,
    /// Target accuracy δ.
    #[arg(long, default_value_t = 0.1)]
    pub delta: f64,
    /// Iteration cap of the descent loop.
    #[arg(long)]
    pub max_iters: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Use the constant step and iteration count of the theoretical schedule.
    #[arg(long)]
    pub theoretical_schedule: bool,
    /// Required with --theoretical-schedule, whose iteration count can be huge.
    #[arg(long)]
    pub confirm: bool,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub instance: PathBuf,
    /// One of cucb, cucb-sqrt, ts, escb, ossb, oracle.
    #[arg(long)]
    pub algo: String,
    #[arg(long, default_value_t = 10_000)]
    pub horizon: u64,
    #[arg(long, default_value_t = 10)]
    pub reps: usize,
    /// Replication r uses seed `seed + r`.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// CSV destination; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct ValidateArgs {
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Validate this solution file instead of solving.
    #[arg(long)]
    pub check_solution: Option<PathBuf>,
}

/// Enumeration cap, overridable through `GLKIT_ENUM_CAP`.
pub fn enum_cap() -> CliResult<usize> {
    match std::env::var(ENUM_CAP_VAR) {
        Ok(v) => v.trim().parse().map_err(|_| CliError::BadInput(format!("{ENUM_CAP_VAR} must be a positive integer, got {v:?}"))),
        Err(_) => Ok(DEFAULT_ENUM_CAP),
    }
}

fn solve_options(args: &SolverArgs) -> CliResult<SolveOptions> {
    if !(args.delta > 0.0 && args.delta.is_finite()) {
        return Err(CliError::BadInput(format!("delta must be positive, got {}", args.delta)));
    }
    let mut opts = SolveOptions { delta: args.delta, enum_cap: enum_cap()?, ..SolveOptions::default() };
    if let Some(n) = args.max_iters {
        opts.max_iters = n;
    }
    Ok(opts)
}

fn solve_instance(inst: &Instance, opts: &SolveOptions) -> CliResult<SolutionFile> {
    let (output, discretization) = match &inst.theta {
        ThetaSpec::Integer(theta) => (glpg::solve_covered(&inst.set, theta, opts)?, None),
        ThetaSpec::Real { values, epsilon } => {
            let r = glpg::solve_real(&inst.set, values, *epsilon, opts)?;
            let info = DiscretizationInfo { discretized: r.discretized, check: r.check, inflation: r.inflation };
            (r.output, Some(info))
        }
    };
    Ok(SolutionFile { instance_id: inst.id.clone(), delta: opts.delta, output, discretization })
}

/// Runs a parsed command and returns the text to print on success.
pub fn run(cli: Cli) -> CliResult<String> {
    match cli.command {
        Command::Solve(args) => cmd_solve(&args),
        Command::Lowerbound(args) => cmd_lowerbound(&args),
        Command::Simulate(args) => cmd_simulate(&args),
        Command::Validate(args) => cmd_validate(&args),
    }
}

pub fn cmd_solve(args: &SolveArgs) -> CliResult<String> {
    let inst = load_instance(&args.solver.instance)?;
    let mut opts = solve_options(&args.solver)?;
    let mut report = String::new();
    if args.theoretical_schedule {
        let theta = match &inst.theta {
            ThetaSpec::Integer(t) => t.clone(),
            ThetaSpec::Real { values, epsilon } => instance::discretize(values, *epsilon)?,
        };
        let problem = glpg::prepare(&inst.set, &theta, opts.enum_cap)?;
        let params = glpg::schedule(
            opts.delta,
            opts.epsilon,
            problem.gaps.m,
            inst.set.dim(),
            theta.norm_inf() as f64,
            problem.q.norm(),
        )?;
        if !args.confirm {
            return Err(CliError::BadInput(format!(
                "the theoretical schedule runs T = {:.3e} iterations; pass --confirm to proceed",
                params.t_theory
            )));
        }
        opts.theoretical = true;
        opts.max_iters = args.solver.max_iters.unwrap_or(usize::MAX);
        report.push_str(&format!("theoretical schedule: T = {:.3e}\n", params.t_theory));
    }
    let sol = solve_instance(&inst, &opts)?;
    if let Some(info) = &sol.discretization {
        if let Some(w) = &info.check.warning {
            report.push_str(&format!("warning: {w}\n"));
        }
    }
    if let Some(out) = &args.out {
        write_json(out, &sol)?;
    }
    report.push_str(&format!(
        "objective={} certified_violation={:e} iterations={}{}",
        sol.output.objective,
        sol.output.certified_max_violation,
        sol.output.iterations,
        if sol.output.truncated { " (truncated)" } else { "" }
    ));
    Ok(report)
}

pub fn cmd_lowerbound(args: &SolverArgs) -> CliResult<String> {
    let inst = load_instance(&args.instance)?;
    let opts = solve_options(args)?;
    let sol = solve_instance(&inst, &opts)?;
    let cap = enum_cap()?.min(BRUTE_FORCE_CAP);
    let brute = match reference::brute_force_gl_with_cap(&inst.set, &inst.theta.as_f64(), 1e-9, cap) {
        Ok(r) => format!("{:.4}", r.c),
        Err(GlError::TooLarge { .. }) => "n/a (|X| cap)".to_string(),
        Err(e) => return Err(e.into()),
    };
    Ok(format!("glpg={} brute={brute}", fmt_objective(sol.output.objective)))
}

fn fmt_objective(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else {
        format!("{v:.4}")
    }
}

pub fn cmd_simulate(args: &SimulateArgs) -> CliResult<String> {
    let algo: Algorithm = args.algo.parse().map_err(|e: GlError| CliError::BadInput(e.to_string()))?;
    let inst = load_instance(&args.instance)?;
    if args.horizon < inst.set.dim() as u64 {
        return Err(CliError::BadInput(format!("horizon must be at least d = {}", inst.set.dim())));
    }
    let exp = Experiment {
        instance_id: inst.id.clone(),
        set: &inst.set,
        theta: inst.theta.as_f64(),
        algo,
        horizon: args.horizon,
        ossb: OssbConfig::default(),
    };
    let traces = simulator::run_experiment(&exp, args.reps, args.seed)?;
    let mut buf = Vec::new();
    simulator::write_csv(&traces, &mut buf).map_err(|e| CliError::BadInput(e.to_string()))?;
    let summary = format!("{algo}: mean final regret {:.4} over {} runs", simulator::mean_final_regret(&traces), traces.len());
    match &args.out {
        Some(path) => {
            write_file(path, &buf)?;
            Ok(summary)
        }
        None => Ok(String::from_utf8(buf).expect("csv output is UTF-8")),
    }
}

pub fn cmd_validate(args: &ValidateArgs) -> CliResult<String> {
    let inst = load_instance(&args.solver.instance)?;
    let opts = solve_options(&args.solver)?;
    let cap = enum_cap()?.min(BRUTE_FORCE_CAP);
    let theta = inst.theta.as_f64();
    let brute = match reference::brute_force_gl_with_cap(&inst.set, &theta, 1e-9, cap) {
        Ok(r) => r,
        Err(GlError::TooLarge { cap }) => {
            return Err(CliError::BadInput(format!("validation needs |X| <= {cap}; raise {ENUM_CAP_VAR} up to {BRUTE_FORCE_CAP}")))
        }
        Err(e) => return Err(e.into()),
    };
    let sol = match &args.check_solution {
        Some(path) => {
            let text =
                fs::read_to_string(path).map_err(|e| CliError::BadInput(format!("cannot read {}: {e}", path.display())))?;
            serde_json::from_str::<SolutionFile>(&text)
                .map_err(|e| CliError::Validation(format!("{}: malformed solution: {e}", path.display())))?
        }
        None => solve_instance(&inst, &opts)?,
    };
    let out = &sol.output;
    if out.atoms.len() != out.weights.len() {
        return Err(CliError::Validation("atoms and weights differ in length".into()));
    }
    for (x, &a) in out.atoms.iter().zip(&out.weights) {
        if x.dim() != inst.set.dim() || !inst.set.contains(x) {
            return Err(CliError::Validation(format!("atom {x} is not a decision of the instance")));
        }
        if !(a >= 0.0 && a.is_finite()) {
            return Err(CliError::Validation(format!("atom {x} has weight {a}")));
        }
    }
    let objective = allocation_objective(&inst.set, &theta, &out.atoms, &out.weights)?;
    if objective.to_bits() != out.objective.to_bits() {
        return Err(CliError::Validation(format!(
            "stored objective {} does not match its atoms ({objective})",
            out.objective
        )));
    }
    let violation = allocation_violation(&inst.set, &theta, &out.atoms, &out.weights)?;
    let gap = (objective - brute.c).abs();
    let line = format!("glpg={objective:.6} brute={:.6} gap={gap:.2e} violation={violation:e}", brute.c);
    if gap > opts.delta || violation > VIOLATION_TOL {
        return Err(CliError::Validation(line));
    }
    Ok(format!("ok {line}"))
}

/// `Σ_k α_k Δ_{x^k}` under a real or integer θ.
pub fn allocation_objective(set: &DecisionSet, theta: &[f64], atoms: &[Decision], weights: &[f64]) -> crate::Result<f64> {
    let opt = set.linear_max(theta)?.dot(theta);
    Ok(atoms.iter().zip(weights).map(|(x, a)| a * (opt - x.dot(theta))).sum())
}

/// Enumerated `max_x h_x` of an allocation; `+∞` when a needed coordinate
/// has no samples.
pub fn allocation_violation(set: &DecisionSet, theta: &[f64], atoms: &[Decision], weights: &[f64]) -> crate::Result<f64> {
    let d = set.dim();
    let mut w = vec![0.0; d];
    for (x, a) in atoms.iter().zip(weights) {
        for i in x.support() {
            w[i] += a;
        }
    }
    let opt = set.linear_max(theta)?.dot(theta);
    let items = glpg::suboptimal_items_real(set, theta)?;
    let mut worst = f64::NEG_INFINITY;
    for x in set.enumerate(BRUTE_FORCE_CAP.max(enum_cap().unwrap_or(DEFAULT_ENUM_CAP)))? {
        let v = match crate::polytope::violation(&w, &x, &items, opt - x.dot(theta)) {
            Ok(v) => v,
            Err(GlError::DivisionGuard(_)) => f64::INFINITY,
            Err(e) => return Err(e),
        };
        worst = worst.max(v);
    }
    Ok(worst)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::BadInput(e.to_string()))?;
    write_file(path, text.as_bytes())
}

fn write_file(path: &Path, bytes: &[u8]) -> CliResult<()> {
    let mut f = fs::File::create(path).map_err(|e| CliError::BadInput(format!("cannot write {}: {e}", path.display())))?;
    f.write_all(bytes).map_err(|e| CliError::BadInput(format!("cannot write {}: {e}", path.display())))
}
