//! Monte-Carlo semi-bandit environment, baseline policies, an OSSB-style
//! certainty-equivalence policy driven by GLPG allocations, and regret traces.

use std::collections::HashMap;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{GlError, Result};
use crate::glpg::{self, SolveOptions};
use crate::instance;
use crate::structures::{Decision, DecisionSet, DEFAULT_ENUM_CAP};

/// Per-coordinate noise variance.
pub const NOISE_VARIANCE: f64 = 0.5;

/// Gaussian semi-bandit environment `Y(t) ~ N(θ, ½I)`.
#[derive(Clone, Debug)]
pub struct Environment {
    theta: Vec<f64>,
    noise: Normal<f64>,
    rng: ChaCha8Rng,
}

impl Environment {
    pub fn new(theta: Vec<f64>, seed: u64) -> Self {
        let noise = Normal::new(0.0, NOISE_VARIANCE.sqrt()).expect("finite variance");
        Self { theta, noise, rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    /// Draws `Y(t)` for every coordinate.
    pub fn draw(&mut self) -> Vec<f64> {
        self.theta.iter().map(|&m| m + self.noise.sample(&mut self.rng)).collect()
    }

    /// Draws `Y(t)` and reveals the coordinates selected by `x`.
    pub fn play(&mut self, x: &Decision) -> Vec<(usize, f64)> {
        let y = self.draw();
        x.support().map(|i| (i, y[i])).collect()
    }
}

/// Sample counts and empirical means.
#[derive(Clone, Debug, PartialEq)]
pub struct LearnerState {
    n: Vec<u64>,
    sums: Vec<f64>,
    /// Rounds played so far.
    t: u64,
}

impl LearnerState {
    pub fn new(d: usize) -> Self {
        Self { n: vec![0; d], sums: vec![0.0; d], t: 0 }
    }

    pub fn counts(&self) -> &[u64] {
        &self.n
    }

    pub fn rounds(&self) -> u64 {
        self.t
    }

    /// `θ̂_i`, 0 while `n_i = 0`.
    pub fn theta_hat(&self) -> Vec<f64> {
        self.n.iter().zip(&self.sums).map(|(&n, &s)| s / n.max(1) as f64).collect()
    }

    pub fn initialized(&self) -> bool {
        self.n.iter().all(|&n| n > 0)
    }

    pub fn update(&mut self, observed: &[(usize, f64)]) {
        for &(i, y) in observed {
            self.n[i] += 1;
            self.sums[i] += y;
        }
        self.t += 1;
    }

    fn require_initialized(&self) -> Result<()> {
        match self.n.iter().position(|&n| n == 0) {
            Some(i) => Err(GlError::InvalidParameter(format!("coordinate {i} has no samples yet"))),
            None => Ok(()),
        }
    }
}

/// Exploration bonus of CUCB.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CucbBonus {
    /// `ln T / n_i`.
    Printed,
    /// `√(1.5 ln t / n_i)`.
    Sqrt,
}

/// CUCB: `argmax θ̂ᵀx + Σ x_i·bonus_i`.
pub fn cucb_select(state: &LearnerState, set: &DecisionSet, horizon: u64, bonus: CucbBonus) -> Result<Decision> {
    state.require_initialized()?;
    let ln_t_horizon = (horizon.max(1) as f64).ln();
    let ln_t = ((state.t + 1) as f64).ln();
    let index: Vec<f64> = state
        .theta_hat()
        .iter()
        .zip(&state.n)
        .map(|(&m, &n)| match bonus {
            CucbBonus::Printed => m + ln_t_horizon / n as f64,
            CucbBonus::Sqrt => m + (1.5 * ln_t / n as f64).sqrt(),
        })
        .collect();
    set.linear_max(&index)
}

/// Thompson sampling with `V ~ N(θ̂, diag(1/n_i))`.
pub fn ts_select<R: Rng + ?Sized>(state: &LearnerState, set: &DecisionSet, rng: &mut R) -> Result<Decision> {
    state.require_initialized()?;
    let v: Vec<f64> = state
        .theta_hat()
        .iter()
        .zip(&state.n)
        .map(|(&m, &n)| {
            let z: f64 = StandardNormal.sample(rng);
            m + z / (n as f64).sqrt()
        })
        .collect();
    set.linear_max(&v)
}

/// ESCB by enumeration: `argmax θ̂ᵀx + √(Σ x_i ln T / n_i)`.
pub fn escb_select(state: &LearnerState, set: &DecisionSet, horizon: u64) -> Result<Decision> {
    let all = set.enumerate(DEFAULT_ENUM_CAP)?;
    escb_over(state, &all, horizon)
}

fn escb_over(state: &LearnerState, all: &[Decision], horizon: u64) -> Result<Decision> {
    state.require_initialized()?;
    let ln_t = (horizon.max(1) as f64).ln();
    let theta = state.theta_hat();
    let inv: Vec<f64> = state.n.iter().map(|&n| ln_t / n as f64).collect();
    let mut best: Option<(f64, &Decision)> = None;
    for x in all {
        let v = x.dot(&theta) + x.dot(&inv).sqrt();
        // Ties go to the lexicographically smallest decision, as in linear_max.
        let better = best.map_or(true, |(b, bx)| {
            let tol = 1e-12 * (1.0 + b.abs());
            v > b + tol || (v >= b - tol && x < bx)
        });
        if better {
            best = Some((v, x));
        }
    }
    best.map(|(_, x)| x.clone()).ok_or(GlError::EmptySet)
}

/// Configuration of the certainty-equivalence policy.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OssbConfig {
    /// Solver options for each epoch.
    pub solve: SolveOptions,
    /// Lower cap of the discretization step `ε_j = 2^{-j/2}`.
    pub epsilon_floor: f64,
}

impl Default for OssbConfig {
    fn default() -> Self {
        Self { solve: SolveOptions { max_iters: 20_000, ..SolveOptions::default() }, epsilon_floor: 0.05 }
    }
}

/// OSSB-style certainty-equivalence policy with epochs at `t = 2^j`.
///
/// At each epoch boundary θ̂ is clamped below by `ε_j`, discretized and
/// solved with GLPG; the allocation `{x_k: α_k}` is cached. Between
/// boundaries the policy plays the atom with the largest deficit against
/// `⌈α_k ln t⌉`, or the empirical best when no atom is deficient. Solver
/// failures fall back to CUCB for the epoch.
#[derive(Clone, Debug)]
pub struct OssbCe {
    config: OssbConfig,
    next_epoch: u64,
    allocation: Vec<(Decision, f64)>,
    plays: HashMap<Decision, u64>,
    fallback: bool,
    epochs: usize,
}

impl OssbCe {
    pub fn new(config: OssbConfig) -> Self {
        Self { config, next_epoch: 1, allocation: Vec::new(), plays: HashMap::new(), fallback: false, epochs: 0 }
    }

    pub fn allocation(&self) -> &[(Decision, f64)] {
        &self.allocation
    }

    pub fn epochs(&self) -> usize {
        self.epochs
    }

    pub fn plays(&self, x: &Decision) -> u64 {
        self.plays.get(x).copied().unwrap_or(0)
    }

    /// Records a played decision, including initialization plays.
    pub fn record(&mut self, x: &Decision) {
        *self.plays.entry(x.clone()).or_insert(0) += 1;
    }

    /// Solves the lower-bound program on θ̂ with step `ε`. Returns the
    /// allocation in units of the real θ.
    pub fn allocate(set: &DecisionSet, theta_hat: &[f64], epsilon: f64, opts: &SolveOptions) -> Result<Vec<(Decision, f64)>> {
        let clamped: Vec<f64> = theta_hat.iter().map(|&v| v.max(epsilon)).collect();
        let theta = instance::discretize(&clamped, epsilon)?;
        let out = glpg::solve(set, &theta, opts)?;
        let opt = set.linear_max(&theta.as_f64())?.dot_int(theta.values());
        let scale = epsilon * epsilon;
        // Weight on optimal decisions costs nothing and explores nothing.
        Ok(out
            .atoms
            .into_iter()
            .zip(out.weights)
            .filter(|(x, _)| x.dot_int(theta.values()) < opt)
            .map(|(x, a)| (x, a / scale))
            .collect())
    }

    pub fn select(&mut self, state: &LearnerState, set: &DecisionSet, horizon: u64) -> Result<Decision> {
        state.require_initialized()?;
        let t = state.t + 1;
        if t >= self.next_epoch {
            let j = 63 - t.leading_zeros() as u64;
            self.next_epoch = 1u64 << (j + 1);
            self.epochs += 1;
            let epsilon = 2f64.powf(-(j as f64) / 2.0).max(self.config.epsilon_floor);
            match Self::allocate(set, &state.theta_hat(), epsilon, &self.config.solve) {
                Ok(a) => {
                    self.allocation = a;
                    self.fallback = false;
                }
                Err(e) => {
                    log::warn!("epoch {j}: solver failed ({e}); using cucb until the next epoch");
                    self.allocation.clear();
                    self.fallback = true;
                }
            }
        }
        if self.fallback {
            return cucb_select(state, set, horizon, CucbBonus::Printed);
        }
        let ln_t = (t as f64).ln();
        let mut worst: Option<(f64, &Decision)> = None;
        for (x, alpha) in &self.allocation {
            let target = (alpha * ln_t).ceil();
            let deficit = target - self.plays(x) as f64;
            if deficit > 0.0 && worst.map_or(true, |(w, _)| deficit > w) {
                worst = Some((deficit, x));
            }
        }
        match worst {
            Some((_, x)) => Ok(x.clone()),
            None => set.linear_max(&state.theta_hat()),
        }
    }
}

/// Policy identifiers accepted by the simulator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Algorithm {
    Cucb,
    CucbSqrt,
    Ts,
    Escb,
    Ossb,
    Oracle,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Cucb => "cucb",
            Algorithm::CucbSqrt => "cucb-sqrt",
            Algorithm::Ts => "ts",
            Algorithm::Escb => "escb",
            Algorithm::Ossb => "ossb",
            Algorithm::Oracle => "oracle",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = GlError;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "cucb" => Algorithm::Cucb,
            "cucb-sqrt" => Algorithm::CucbSqrt,
            "ts" => Algorithm::Ts,
            "escb" => Algorithm::Escb,
            "ossb" => Algorithm::Ossb,
            "oracle" => Algorithm::Oracle,
            other => return Err(GlError::InvalidParameter(format!("unknown algorithm {other:?}"))),
        })
    }
}

/// Cumulative pseudo-regret of one replication; `cum_regret[t]` is the
/// regret after `t` rounds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegretTrace {
    pub instance_id: String,
    pub algo: Algorithm,
    pub seed: u64,
    pub cum_regret: Vec<f64>,
}

impl RegretTrace {
    pub fn final_regret(&self) -> f64 {
        self.cum_regret.last().copied().unwrap_or(0.0)
    }
}

/// Experiment description shared by every replication.
#[derive(Clone, Debug)]
pub struct Experiment<'a> {
    pub instance_id: String,
    pub set: &'a DecisionSet,
    pub theta: Vec<f64>,
    pub algo: Algorithm,
    pub horizon: u64,
    pub ossb: OssbConfig,
}

enum Policy {
    Simple,
    Escb(Vec<Decision>),
    Ossb(Box<OssbCe>),
    Oracle(Decision),
}

/// `R` replications with seeds `base_seed + 1 ..= base_seed + R`, run in
/// parallel and returned in seed order.
pub fn run_experiment(exp: &Experiment<'_>, reps: usize, base_seed: u64) -> Result<Vec<RegretTrace>> {
    (1..=reps as u64).into_par_iter().map(|r| run_one(exp, base_seed.wrapping_add(r))).collect()
}

/// One replication. The first rounds play covering witnesses until every
/// coordinate has a sample.
pub fn run_one(exp: &Experiment<'_>, seed: u64) -> Result<RegretTrace> {
    let set = exp.set;
    let d = set.dim();
    if exp.theta.len() != d {
        return Err(GlError::DimensionMismatch { expected: d, actual: exp.theta.len() });
    }
    if exp.horizon < d as u64 {
        return Err(GlError::InvalidParameter(format!("horizon {} is shorter than d = {d}", exp.horizon)));
    }
    let covering = set.check_covering()?;
    if !covering.uncovered.is_empty() {
        return Err(GlError::Uncovered(covering.uncovered));
    }
    let x_star = set.linear_max(&exp.theta)?;
    let opt = x_star.dot(&exp.theta);
    let mut policy = match exp.algo {
        Algorithm::Escb => Policy::Escb(set.enumerate(DEFAULT_ENUM_CAP)?),
        Algorithm::Ossb => Policy::Ossb(Box::new(OssbCe::new(exp.ossb.clone()))),
        Algorithm::Oracle => Policy::Oracle(x_star.clone()),
        _ => Policy::Simple,
    };
    let mut env = Environment::new(exp.theta.clone(), seed);
    let mut policy_rng = ChaCha8Rng::seed_from_u64(seed);
    policy_rng.set_stream(1);
    let mut state = LearnerState::new(d);
    let mut cum = Vec::with_capacity(exp.horizon as usize + 1);
    cum.push(0.0);
    let mut regret = 0.0;
    for _ in 0..exp.horizon {
        let x = if let Some(i) = state.n.iter().position(|&n| n == 0) {
            covering.witnesses[i].clone().expect("covered coordinate has a witness")
        } else {
            match &mut policy {
                Policy::Simple => match exp.algo {
                    Algorithm::Cucb => cucb_select(&state, set, exp.horizon, CucbBonus::Printed)?,
                    Algorithm::CucbSqrt => cucb_select(&state, set, exp.horizon, CucbBonus::Sqrt)?,
                    _ => ts_select(&state, set, &mut policy_rng)?,
                },
                Policy::Escb(all) => escb_over(&state, all, exp.horizon)?,
                Policy::Ossb(p) => p.select(&state, set, exp.horizon)?,
                Policy::Oracle(x) => x.clone(),
            }
        };
        if let Policy::Ossb(p) = &mut policy {
            p.record(&x);
        }
        let observed = env.play(&x);
        state.update(&observed);
        regret += (opt - x.dot(&exp.theta)).max(0.0);
        cum.push(regret);
    }
    Ok(RegretTrace { instance_id: exp.instance_id.clone(), algo: exp.algo, seed, cum_regret: cum })
}

/// `{1, 2, 5}·10^k` up to `horizon`, followed by `horizon` itself.
pub fn checkpoints(horizon: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut p = 1u64;
    'outer: loop {
        for m in [1, 2, 5] {
            let t = m * p;
            if t > horizon {
                break 'outer;
            }
            out.push(t);
        }
        p = match p.checked_mul(10) {
            Some(p) => p,
            None => break,
        };
    }
    if out.last() != Some(&horizon) && horizon > 0 {
        out.push(horizon);
    }
    out
}

#[derive(Serialize)]
struct Row<'a> {
    instance_id: &'a str,
    algo: &'a str,
    seed: u64,
    t: u64,
    cum_regret: f64,
}

/// Writes `instance_id,algo,seed,t,cum_regret` rows at the checkpoints.
pub fn write_csv<W: Write>(traces: &[RegretTrace], out: W) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for tr in traces {
        let horizon = tr.cum_regret.len().saturating_sub(1) as u64;
        for t in checkpoints(horizon) {
            w.serialize(Row {
                instance_id: &tr.instance_id,
                algo: tr.algo.name(),
                seed: tr.seed,
                t,
                cum_regret: tr.cum_regret[t as usize],
            })?;
        }
    }
    w.flush()
}

/// Mean of the final regrets.
pub fn mean_final_regret(traces: &[RegretTrace]) -> f64 {
    if traces.is_empty() {
        return 0.0;
    }
    traces.iter().map(RegretTrace::final_regret).sum::<f64>() / traces.len() as f64
}
