//! The GLPG solver: penalized projected subgradient descent on the reduced
//! problem, a budgeted-oracle sweep for the most violated constraint,
//! inflation, and decomposition of the result into decisions.

use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{GlError, Result};
use crate::instance::{self, DiscretizationCheck, GapProfile, Theta};
use crate::linalg;
use crate::polytope::{self, FeasibleRegion, Projector, ReducedProblem};
use crate::structures::{
    enumerated_profile, hull_for_reduction, lex_first_best_budgeted, BudgetedOracle, Decision, DecisionSet, HullRep,
    DEFAULT_ENUM_CAP,
};

/// Decision sets at most this large are enumerated to certify feasibility.
const CERTIFY_ENUM_CAP: usize = 100_000;

/// How the step size is chosen.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum StepRule {
    /// Constant `η` and `T` from the parameter schedule, uniform averaging.
    Theoretical,
    /// `η₀/√t` steps along `g/‖g‖`, averaging weighted by `t`.
    Normalized,
}

/// Stop once the averaged objective and its violation move less than `tol`
/// (relative) over `window` iterations.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Plateau {
    pub window: usize,
    pub tol: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GLPGParams {
    pub delta: f64,
    pub epsilon: f64,
    pub delta2: f64,
    pub delta1: f64,
    pub lambda: f64,
    /// Iteration count of the schedule (may be astronomically large).
    pub t_theory: f64,
    pub eta: f64,
    pub step_rule: StepRule,
    pub max_iters: usize,
    pub plateau: Option<Plateau>,
    /// `η₀` for normalized steps; estimated from the gaps when `None`.
    pub step_scale: Option<f64>,
}

impl GLPGParams {
    /// Iterations the loop will run at most.
    pub fn iterations(&self) -> usize {
        match self.step_rule {
            StepRule::Theoretical => {
                let t = self.t_theory.ceil().max(1.0);
                if t >= self.max_iters as f64 {
                    self.max_iters
                } else {
                    t as usize
                }
            }
            StepRule::Normalized => self.max_iters,
        }
    }
}

/// Parameter schedule: `δ₂ = δε/(m²d‖θ‖∞)`, `δ₁ = δ/(2(1+δ₂))`,
/// `λ = (δ₁ + m²d‖θ‖∞)/δ₂`, then `T` and `η`.
pub fn schedule(delta: f64, epsilon: f64, m: usize, d: usize, theta_inf: f64, q_norm: f64) -> Result<GLPGParams> {
    if !(delta > 0.0) {
        return Err(GlError::InvalidParameter(format!("delta must be positive, got {delta}")));
    }
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(GlError::InvalidParameter(format!("epsilon must lie in (0, 1], got {epsilon}")));
    }
    let (m, d) = (m.max(1) as f64, d.max(1) as f64);
    let c = m * m * d * theta_inf;
    let delta2 = delta * epsilon / c;
    let delta1 = delta / (2.0 * (1.0 + delta2));
    let lambda = (delta1 + c) / delta2;
    let inner = q_norm * q_norm + lambda * lambda * d * m.powi(8) * theta_inf.powi(8) / (epsilon * epsilon);
    let lead = m.powi(5) * d * d * theta_inf * theta_inf / (epsilon * epsilon);
    let t_theory = lead * inner / (delta1 * delta1);
    let eta = (lead / (t_theory * inner)).sqrt();
    Ok(GLPGParams {
        delta,
        epsilon,
        delta2,
        delta1,
        lambda,
        t_theory,
        eta,
        step_rule: StepRule::Normalized,
        max_iters: 200_000,
        plateau: Some(Plateau { window: 1000, tol: 1e-7 }),
        step_scale: None,
    })
}

/// User-facing solver options.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    pub delta: f64,
    pub epsilon: f64,
    pub theoretical: bool,
    pub max_iters: usize,
    pub plateau: Option<Plateau>,
    pub step_scale: Option<f64>,
    pub enum_cap: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            delta: 0.1,
            epsilon: 1.0,
            theoretical: false,
            max_iters: 200_000,
            plateau: Some(Plateau { window: 1000, tol: 1e-7 }),
            step_scale: None,
            enum_cap: DEFAULT_ENUM_CAP,
        }
    }
}

/// The constraint oracle: sweeps the budget `θᵀx* − s` for
/// `s = 0..m‖θ‖∞` and scores `Σ_{i∈I} x_i/(εw_i) − s²`.
pub struct Sweep<'a> {
    set: &'a DecisionSet,
    theta: Vec<u64>,
    opt: u64,
    s_max: u64,
    items: Vec<usize>,
    epsilon: f64,
    cap: usize,
    cache: Option<Vec<Decision>>,
    oracle: Option<&'a dyn BudgetedOracle>,
}

impl<'a> Sweep<'a> {
    /// Exact sweep; matchings and explicit sets are enumerated once.
    pub fn new(set: &'a DecisionSet, theta: &Theta, gaps: &GapProfile, cap: usize) -> Result<Self> {
        let cache = match set {
            DecisionSet::Matching(_) | DecisionSet::Explicit(_) => {
                Some(set.enumerate(cap).map_err(|_| GlError::OracleUnavailable(set.kind().into()))?)
            }
            _ => None,
        };
        Ok(Self {
            set,
            theta: theta.values().to_vec(),
            opt: gaps.opt_value,
            s_max: gaps.m as u64 * theta.norm_inf(),
            items: gaps.suboptimal.clone(),
            epsilon: 1.0,
            cap,
            cache,
            oracle: None,
        })
    }

    /// Sweep driven by an approximate oracle of ratio `ε`.
    pub fn with_oracle(set: &'a DecisionSet, theta: &Theta, gaps: &GapProfile, oracle: &'a dyn BudgetedOracle) -> Self {
        Self {
            set,
            theta: theta.values().to_vec(),
            opt: gaps.opt_value,
            s_max: gaps.m as u64 * theta.norm_inf(),
            items: gaps.suboptimal.clone(),
            epsilon: oracle.ratio(),
            cap: DEFAULT_ENUM_CAP,
            cache: None,
            oracle: Some(oracle),
        }
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    fn weights(&self, w: &[f64], scale: f64) -> Result<Vec<f64>> {
        let mut a = vec![0.0; self.set.dim()];
        for &i in &self.items {
            if !(w[i] > 0.0) {
                return Err(GlError::DivisionGuard(i));
            }
            a[i] = 1.0 / (scale * w[i]);
        }
        Ok(a)
    }

    fn profile(&self, a: &[f64]) -> Result<Vec<Option<f64>>> {
        if let Some(all) = &self.cache {
            return Ok(enumerated_profile(all, a, &self.theta, self.opt, &vec![None; a.len()]));
        }
        match self.oracle {
            Some(o) => o.profile(self.set, a, &self.theta, self.opt),
            None => self.set.budget_profile(a, &self.theta, self.opt, &vec![None; a.len()], self.cap),
        }
    }

    /// Best sweep score at `scale·w` and the budget offset `s` reaching it
    /// (smallest on ties).
    fn best(&self, w: &[f64], scale: f64) -> Result<(f64, u64, Vec<f64>)> {
        let a = self.weights(w, scale)?;
        let profile = self.profile(&a)?;
        let mut best = f64::NEG_INFINITY;
        let mut arg = 0;
        for s in 0..=self.s_max {
            let budget = self.opt.saturating_sub(s) as usize;
            if let Some(v) = profile[budget] {
                let score = v - (s * s) as f64;
                if best == f64::NEG_INFINITY || score > best + 1e-12 * (1.0 + best.abs()) {
                    best = score;
                    arg = s;
                }
            }
        }
        if best == f64::NEG_INFINITY {
            return Err(GlError::EmptySet);
        }
        Ok((best, arg, a))
    }

    /// The sweep's estimate of `max_x h_x(εw)`.
    pub fn score(&self, w: &[f64]) -> Result<f64> {
        Ok(self.best(w, self.epsilon)?.0)
    }

    /// `max_x h_x(w)`; exact for the exact oracle.
    pub fn max_violation(&self, w: &[f64]) -> Result<f64> {
        if self.items.is_empty() {
            return Ok(0.0);
        }
        Ok(self.best(w, 1.0)?.0)
    }

    /// The decision attaining the sweep score at `εw`, and that score.
    pub fn most_violated(&self, w: &[f64]) -> Result<(Decision, f64)> {
        let (score, s, a) = self.best(w, self.epsilon)?;
        let budget = self.opt.saturating_sub(s);
        let x = if let Some(all) = &self.cache {
            lex_first_best_budgeted(all, &a, &self.theta, budget)
        } else if let Some(o) = self.oracle {
            o.maximize(self.set, &a, &self.theta, budget as i64)?
        } else {
            self.set.budgeted_linear_max(&a, &self.theta, budget as i64, self.cap)?
        };
        Ok((x.ok_or(GlError::EmptySet)?, score))
    }
}

/// Most violated constraint at `w` (original or lifted coordinates; only
/// entries on `I` are read).
pub fn most_violated(set: &DecisionSet, w: &[f64], theta: &Theta, gaps: &GapProfile, cap: usize) -> Result<(Decision, f64)> {
    Sweep::new(set, theta, gaps, cap)?.most_violated(w)
}

/// Output of the descent loop on the reduced problem.
#[derive(Clone, Debug, PartialEq)]
pub struct ReducedSolution {
    /// Inflated averaged iterate (lifted).
    pub w: DVector<f64>,
    pub iterations: usize,
    /// `max_x h_x` of the averaged iterate before any inflation.
    pub raw_violation: f64,
    /// Total multiplicative inflation applied to the average.
    pub inflation: f64,
    /// Stopped by the iteration cap before the schedule's `T`.
    pub truncated: bool,
}

/// Scale of the optimal allocation: `m Σ_{i∈I} lift(yⁱ)/Δ_(i)²` with `yⁱ`
/// the best decision containing `i`, which is feasible.
pub fn feasible_reference(problem: &ReducedProblem, set: &DecisionSet) -> Result<DVector<f64>> {
    let theta = problem.theta.as_f64();
    let boost = 2.0 * set.dim() as f64 * problem.theta.norm_inf() as f64;
    let mut w = DVector::zeros(problem.lifted_dim());
    for &i in &problem.items {
        let mut a = theta.clone();
        a[i] += boost;
        let y = set.linear_max(&a)?;
        let gap = problem.gap(&y).max(1.0);
        w += problem.lift(&y) / (gap * gap);
    }
    Ok(w * problem.gaps.m.max(1) as f64)
}

/// Penalized projected subgradient loop followed by `(1+δ₂)` inflation and,
/// when the average still violates a constraint, inflation by `1 + v⁺`.
pub fn solve_reduced(
    problem: &ReducedProblem,
    params: &GLPGParams,
    sweep: &Sweep<'_>,
    projector: &mut Projector,
    reference_scale: f64,
) -> Result<ReducedSolution> {
    let dp = problem.lifted_dim();
    if problem.items.is_empty() {
        return Ok(ReducedSolution { w: DVector::zeros(dp), iterations: 0, raw_violation: 0.0, inflation: 1.0, truncated: false });
    }
    let total = params.iterations();
    let truncated = params.step_rule == StepRule::Theoretical && (total as f64) < params.t_theory.ceil();
    let start = projector.project(&DVector::from_element(dp, problem.w_floor))?;
    match params.step_rule {
        StepRule::Theoretical => {
            let (avg, iterations) = descend(problem, params, sweep, projector, start, total, params.eta)?;
            let (w, raw_violation, inflation) = inflate(sweep, avg, params.delta2)?;
            Ok(ReducedSolution { w, iterations, raw_violation, inflation, truncated })
        }
        StepRule::Normalized => {
            // Restarted stages with a shrinking step scale, each warm-started
            // at the previous average. The cheapest certified candidate wins.
            let stages: Vec<f64> = match params.step_scale {
                Some(s) => vec![s],
                None => RESTART_SCALES.iter().map(|f| f * reference_scale).collect(),
            };
            let per_stage = (total / stages.len()).max(1);
            let mut w0 = start;
            let mut best: Option<(f64, ReducedSolution)> = None;
            let mut iterations = 0;
            for eta0 in stages {
                let (avg, it) = descend(problem, params, sweep, projector, w0, per_stage, eta0)?;
                iterations += it;
                w0 = avg.clone();
                let (w, raw_violation, inflation) = inflate(sweep, avg, params.delta2)?;
                let obj = problem.q.dot(&w);
                if best.as_ref().map_or(true, |(b, _)| obj < *b) {
                    best = Some((obj, ReducedSolution { w, iterations: 0, raw_violation, inflation, truncated }));
                }
            }
            let (_, mut out) = best.expect("at least one stage");
            out.iterations = iterations;
            Ok(out)
        }
    }
}

/// Step scales of the restarted stages, relative to the feasible reference.
const RESTART_SCALES: [f64; 5] = [0.5, 0.1, 0.02, 0.004, 0.0008];

/// One run of the projected subgradient loop; returns the averaged iterate.
fn descend(
    problem: &ReducedProblem,
    params: &GLPGParams,
    sweep: &Sweep<'_>,
    projector: &mut Projector,
    mut w: DVector<f64>,
    total: usize,
    eta: f64,
) -> Result<(DVector<f64>, usize)> {
    let eps = params.epsilon;
    let dp = problem.lifted_dim();
    let mut sum = DVector::zeros(dp);
    let mut weight_sum = 0.0;
    let mut last_check: Option<(f64, f64)> = None;
    let mut iterations = 0;
    for t in 1..=total {
        iterations = t;
        let (x, score) = sweep.most_violated(w.as_slice())?;
        let mut g = problem.q.clone();
        if score > 0.0 {
            let scaled: Vec<f64> = w.iter().map(|v| v * eps).collect();
            let grad = polytope::violation_gradient(&scaled, &x, &problem.items)?;
            g += grad * (params.lambda * eps);
        }
        let step = match params.step_rule {
            StepRule::Theoretical => eta,
            StepRule::Normalized => {
                let n = g.norm();
                if n == 0.0 {
                    0.0
                } else {
                    eta / (t as f64).sqrt() / n
                }
            }
        };
        let y = &w - &g * step;
        w = projector.project(&y)?;
        let omega = match params.step_rule {
            StepRule::Theoretical => 1.0,
            StepRule::Normalized => t as f64,
        };
        sum.axpy(omega, &w, 1.0);
        weight_sum += omega;

        if let Some(p) = params.plateau {
            if params.step_rule == StepRule::Normalized && t % p.window == 0 && t >= 10 * p.window {
                let avg = &sum / weight_sum;
                let obj = problem.q.dot(&avg);
                let viol = sweep.max_violation(avg.as_slice())?;
                if let Some((o, v)) = last_check {
                    if (obj - o).abs() <= p.tol * (1.0 + obj.abs()) && (viol - v).abs() <= p.tol * (1.0 + viol.abs()) {
                        break;
                    }
                }
                last_check = Some((obj, viol));
            }
        }
    }
    Ok((sum / weight_sum, iterations))
}

/// `(1+δ₂)` inflation, then `(1+v⁺)` until the sweep reports no violation.
/// Returns the point, the violation before inflation and the total factor.
fn inflate(sweep: &Sweep<'_>, avg: DVector<f64>, delta2: f64) -> Result<(DVector<f64>, f64, f64)> {
    let raw_violation = sweep.max_violation(avg.as_slice())?;
    let mut inflation = 1.0 + delta2;
    let mut out = avg * inflation;
    for _ in 0..64 {
        let v = sweep.max_violation(out.as_slice())?;
        if v <= 0.0 {
            break;
        }
        let f = (1.0 + v) * (1.0 + 1e-12);
        out *= f;
        inflation *= f;
    }
    Ok((out, raw_violation, inflation))
}

/// Atoms and positive weights with `Σ α_k lift(x^k) = w`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Decomposition {
    pub atoms: Vec<Decision>,
    pub weights: Vec<f64>,
}

impl Decomposition {
    pub fn reconstruct(&self, hull: &HullRep) -> DVector<f64> {
        let mut w = DVector::zeros(hull.lifted_dim());
        for (x, a) in self.atoms.iter().zip(&self.weights) {
            w += hull.lift(x) * *a;
        }
        w
    }
}

/// Carathéodory decomposition of a cone point in the lifted space, with an
/// exact nonnegative least-squares fallback over enumerated decisions.
pub fn decompose(set: &DecisionSet, hull: &HullRep, w: &DVector<f64>, cap: usize) -> Result<Decomposition> {
    if w.len() != hull.lifted_dim() {
        return Err(GlError::DimensionMismatch { expected: hull.lifted_dim(), actual: w.len() });
    }
    let scale = w.amax();
    if scale == 0.0 {
        return Ok(Decomposition { atoms: Vec::new(), weights: Vec::new() });
    }
    match greedy_decompose(set, hull, w, scale) {
        Ok(dec) => Ok(dec),
        Err(_) => nnls_decompose(set, hull, w, scale, cap),
    }
}

fn greedy_decompose(set: &DecisionSet, hull: &HullRep, w: &DVector<f64>, scale: f64) -> Result<Decomposition> {
    let zero = 1e-10 * scale;
    let mut rem = w.clone();
    let mut atoms: Vec<Decision> = Vec::new();
    let mut weights: Vec<f64> = Vec::new();
    for _ in 0..=hull.lifted_dim() {
        if rem.amax() <= 1e-9 * scale {
            break;
        }
        let allowed: Vec<bool> = rem.iter().map(|&v| v > zero).collect();
        let x = hull.min_lifted_support(set, &allowed)?;
        let z = hull.lift(&x);
        if (0..z.len()).any(|j| z[j] > 0.0 && !allowed[j]) {
            return Err(GlError::DecompositionFailure("no decision fits the remaining support".into()));
        }
        let alpha = (0..z.len()).filter(|&j| z[j] > 0.0).map(|j| rem[j] / z[j]).fold(f64::INFINITY, f64::min);
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(GlError::DecompositionFailure("degenerate step".into()));
        }
        rem -= &z * alpha;
        for j in 0..rem.len() {
            if rem[j].abs() <= zero {
                rem[j] = 0.0;
            }
        }
        if rem.min() < -1e-9 * scale {
            return Err(GlError::DecompositionFailure("remainder left the cone".into()));
        }
        match atoms.iter().position(|a| a == &x) {
            Some(k) => weights[k] += alpha,
            None => {
                atoms.push(x);
                weights.push(alpha);
            }
        }
    }
    let dec = Decomposition { atoms, weights };
    if (dec.reconstruct(hull) - w).amax() > 1e-6 * scale || dec.atoms.len() > hull.lifted_dim() {
        return Err(GlError::DecompositionFailure("greedy reconstruction is inexact".into()));
    }
    Ok(dec)
}

fn nnls_decompose(set: &DecisionSet, hull: &HullRep, w: &DVector<f64>, scale: f64, cap: usize) -> Result<Decomposition> {
    let all = set.enumerate(cap).map_err(|e| GlError::DecompositionFailure(format!("fallback unavailable: {e}")))?;
    let cols: Vec<DVector<f64>> = all.iter().map(|x| hull.lift(x)).collect();
    let a = DMatrix::from_columns(&cols);
    let alpha = linalg::nnls(&a, w, 100 * all.len() + 100)?;
    let mut atoms = Vec::new();
    let mut weights = Vec::new();
    for (k, x) in all.into_iter().enumerate() {
        if alpha[k] > 1e-14 * scale {
            atoms.push(x);
            weights.push(alpha[k]);
        }
    }
    let dec = Decomposition { atoms, weights };
    if (dec.reconstruct(hull) - w).amax() > 1e-6 * scale {
        return Err(GlError::DecompositionFailure("point is outside the cone of decisions".into()));
    }
    Ok(dec)
}

/// Solver result. Wall-clock time is kept out of the serialized form.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GLOutput {
    pub atoms: Vec<Decision>,
    pub weights: Vec<f64>,
    /// `Σ_k α_k Δ_{x^k}`.
    pub objective: f64,
    pub certified_max_violation: f64,
    pub iterations: usize,
    /// `qᵀw̄′`, equal to `objective` up to rounding.
    #[serde(default)]
    pub q_objective: f64,
    /// Inflated averaged iterate in the lifted space.
    #[serde(default)]
    pub w_bar_prime: Vec<f64>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub truncated: bool,
    #[serde(skip)]
    pub wallclock_secs: f64,
}

impl GLOutput {
    fn empty(lifted_dim: usize, wallclock_secs: f64) -> Self {
        Self {
            atoms: Vec::new(),
            weights: Vec::new(),
            objective: 0.0,
            certified_max_violation: 0.0,
            iterations: 0,
            q_objective: 0.0,
            w_bar_prime: vec![0.0; lifted_dim],
            truncated: false,
            wallclock_secs,
        }
    }

    /// Per-coordinate exploration rates `Σ_k α_k x^k` (original coordinates).
    pub fn rates(&self, d: usize) -> Vec<f64> {
        let mut w = vec![0.0; d];
        for (x, a) in self.atoms.iter().zip(&self.weights) {
            for i in x.support() {
                w[i] += a;
            }
        }
        w
    }
}

/// Builds the reduced problem of an integer instance with every coordinate
/// covered.
pub fn prepare(set: &DecisionSet, theta: &Theta, cap: usize) -> Result<ReducedProblem> {
    let gaps = instance::analyze(set, theta, cap)?;
    let hull = hull_for_reduction(set, cap)?;
    polytope::reduce(set, hull, theta, gaps)
}

/// Full pipeline on an integer instance whose coordinates are all covered.
pub fn solve(set: &DecisionSet, theta: &Theta, opts: &SolveOptions) -> Result<GLOutput> {
    let start = Instant::now();
    let covering = set.check_covering()?;
    if !covering.uncovered.is_empty() {
        return Err(GlError::Uncovered(covering.uncovered));
    }
    let problem = prepare(set, theta, opts.enum_cap)?;
    if problem.items.is_empty() {
        return Ok(GLOutput::empty(problem.lifted_dim(), start.elapsed().as_secs_f64()));
    }
    let mut params = schedule(
        opts.delta,
        opts.epsilon,
        problem.gaps.m,
        set.dim(),
        theta.norm_inf() as f64,
        problem.q.norm(),
    )?;
    params.max_iters = opts.max_iters;
    params.plateau = opts.plateau;
    params.step_scale = opts.step_scale;
    if opts.theoretical {
        params.step_rule = StepRule::Theoretical;
    }
    let sweep = Sweep::new(set, theta, &problem.gaps, opts.enum_cap)?;
    let region = FeasibleRegion::new(&problem, set)?;
    let mut projector = Projector::new(region);
    let reference = feasible_reference(&problem, set)?;
    let reduced = solve_reduced(&problem, &params, &sweep, &mut projector, reference.norm())?;
    finish(set, &problem, &sweep, reduced, opts.enum_cap, start)
}

fn finish(
    set: &DecisionSet,
    problem: &ReducedProblem,
    sweep: &Sweep<'_>,
    reduced: ReducedSolution,
    cap: usize,
    start: Instant,
) -> Result<GLOutput> {
    let mut dec = decompose(set, &problem.hull, &reduced.w, cap)?;
    let mut w = dec.reconstruct(&problem.hull);
    // Reconstruction error can reopen a constraint by a hair.
    for _ in 0..8 {
        let v = sweep.max_violation(w.as_slice())?;
        if v <= 0.0 {
            break;
        }
        let f = (1.0 + v) * (1.0 + 1e-12);
        w *= f;
        dec.weights.iter_mut().for_each(|a| *a *= f);
    }
    let objective: f64 = dec.atoms.iter().zip(&dec.weights).map(|(x, a)| a * problem.gap(x)).sum();
    let q_objective = problem.q.dot(&w);
    if (objective - q_objective).abs() > 1e-6 * (1.0 + objective.abs()) {
        return Err(GlError::NumericFailure(format!(
            "objective {objective} disagrees with the reduced objective {q_objective}"
        )));
    }
    let certified = certify(set, problem, sweep, w.as_slice())?;
    Ok(GLOutput {
        atoms: dec.atoms,
        weights: dec.weights,
        objective,
        certified_max_violation: certified,
        iterations: reduced.iterations,
        q_objective,
        w_bar_prime: w.iter().copied().collect(),
        truncated: reduced.truncated,
        wallclock_secs: start.elapsed().as_secs_f64(),
    })
}

/// `max_x h_x(w)` by enumeration when small enough, otherwise by the sweep.
fn certify(set: &DecisionSet, problem: &ReducedProblem, sweep: &Sweep<'_>, w: &[f64]) -> Result<f64> {
    match set.enumerate(CERTIFY_ENUM_CAP) {
        Ok(all) => {
            let mut worst = f64::NEG_INFINITY;
            for x in &all {
                worst = worst.max(polytope::violation(w, x, &problem.items, problem.gap(x))?);
            }
            Ok(worst)
        }
        Err(GlError::TooLarge { .. }) => sweep.max_violation(w),
        Err(e) => Err(e),
    }
}

/// Solves after removing coordinates no decision uses; atoms are mapped
/// back to the full dimension.
pub fn solve_covered(set: &DecisionSet, theta: &Theta, opts: &SolveOptions) -> Result<GLOutput> {
    let covering = set.check_covering()?;
    if covering.uncovered.is_empty() {
        return solve(set, theta, opts);
    }
    let (reduced, kept) = set.drop_uncovered(&covering.uncovered)?;
    let mut out = solve(&reduced, &theta.select(&kept), opts)?;
    let d = set.dim();
    out.atoms = out
        .atoms
        .iter()
        .map(|x| Decision::from_support(d, &x.support().map(|k| kept[k]).collect::<Vec<_>>()))
        .collect();
    Ok(out)
}

/// Result of solving a real-valued instance through discretization.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RealSolution {
    pub output: GLOutput,
    pub discretized: Theta,
    pub check: DiscretizationCheck,
    /// `(1 + 2mε/Δmin)²` applied on top of the `1/ε²` rescaling.
    pub inflation: f64,
}

/// Solves the integer instance `⌈θ/ε⌉` with accuracy `δε`, rescales its
/// weights by `1/ε²` and inflates them by `(1 + 2mε/Δmin)²`.
pub fn solve_real(set: &DecisionSet, theta_real: &[f64], epsilon: f64, opts: &SolveOptions) -> Result<RealSolution> {
    let discretized = instance::discretize(theta_real, epsilon)?;
    let check = instance::check_discretization(set, theta_real, epsilon, opts.enum_cap)?;
    let mut int_opts = opts.clone();
    int_opts.delta = opts.delta * epsilon;
    let mut out = solve_covered(set, &discretized, &int_opts)?;
    let delta_min = check.delta_min.unwrap_or(epsilon);
    let inflation = instance::inflation_factor(check.m, epsilon, delta_min);
    let scale = inflation / (epsilon * epsilon);
    let opt = out_opt(set, theta_real)?;
    out.weights.iter_mut().for_each(|a| *a *= scale);
    out.w_bar_prime.iter_mut().for_each(|v| *v *= scale);
    out.objective = out.atoms.iter().zip(&out.weights).map(|(x, a)| a * (opt - x.dot(theta_real))).sum();
    out.q_objective = out.objective;
    out.certified_max_violation = real_violation(set, theta_real, &out, opts.enum_cap)?.unwrap_or(f64::NAN);
    Ok(RealSolution { output: out, discretized, check, inflation })
}

fn out_opt(set: &DecisionSet, theta_real: &[f64]) -> Result<f64> {
    Ok(set.linear_max(theta_real)?.dot(theta_real))
}

/// Enumerated `max_x h_x` of an allocation under a real θ; `None` if the set
/// is too large.
fn real_violation(set: &DecisionSet, theta_real: &[f64], out: &GLOutput, cap: usize) -> Result<Option<f64>> {
    let all = match set.enumerate(cap.min(CERTIFY_ENUM_CAP)) {
        Ok(all) => all,
        Err(GlError::TooLarge { .. }) => return Ok(None),
        Err(e) => return Err(e),
    };
    let opt = out_opt(set, theta_real)?;
    let items = suboptimal_items_real(set, theta_real)?;
    let w = out.rates(set.dim());
    let mut worst = f64::NEG_INFINITY;
    for x in &all {
        let gap = opt - x.dot(theta_real);
        let v = match polytope::violation(&w, x, &items, gap) {
            Ok(v) => v,
            Err(GlError::DivisionGuard(_)) => f64::INFINITY,
            Err(e) => return Err(e),
        };
        worst = worst.max(v);
    }
    Ok(Some(worst))
}

/// Items in no optimal decision of a real-valued instance.
pub fn suboptimal_items_real(set: &DecisionSet, theta_real: &[f64]) -> Result<Vec<usize>> {
    let d = set.dim();
    let opt = out_opt(set, theta_real)?;
    let inf = theta_real.iter().fold(0.0_f64, |a, b| a.max(b.abs()));
    let tol = 1e-12 * (1.0 + opt.abs());
    let mut out = Vec::new();
    for i in 0..d {
        let mut a = theta_real.to_vec();
        a[i] += 2.0 * d as f64 * inf;
        let y = set.linear_max(&a)?;
        if y.dot(theta_real) < opt - tol {
            out.push(i);
        }
    }
    Ok(out)
}
