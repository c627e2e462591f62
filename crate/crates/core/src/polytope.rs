//! The reduced problem `min qᵀw` over `{w : Mw = 0, w ≥ 0}` with reciprocal
//! constraints, and Euclidean projection onto its feasible region.

use nalgebra::{DMatrix, DVector};

use crate::error::{GlError, Result};
use crate::instance::{GapProfile, Theta};
use crate::linalg;
use crate::structures::{Decision, DecisionSet, HullRep};

/// Tolerance on the reduction identity `qᵀlift(x) = Δ_x`.
pub const IDENTITY_TOL: f64 = 1e-9;

#[derive(Clone, Debug)]
pub struct ReducedProblem {
    pub hull: HullRep,
    /// `M = A − b bᵀA/‖b‖²`, or `A` when `b = 0`.
    pub m: DMatrix<f64>,
    /// `q = (θᵀx*) bᵀA/‖b‖² − θ`, with θ padded by zeros on slacks.
    pub q: DVector<f64>,
    /// `w̄ = (m‖θ‖∞)⁻²`.
    pub w_floor: f64,
    /// The suboptimal items `I` (original coordinates).
    pub items: Vec<usize>,
    pub theta: Theta,
    pub gaps: GapProfile,
}

impl ReducedProblem {
    pub fn lifted_dim(&self) -> usize {
        self.hull.lifted_dim()
    }

    pub fn dim(&self) -> usize {
        self.hull.dim()
    }

    pub fn lift(&self, x: &Decision) -> DVector<f64> {
        self.hull.lift(x)
    }

    pub fn gap(&self, x: &Decision) -> f64 {
        self.gaps.gap(&self.theta, x)
    }

    /// Largest `|qᵀlift(x) − Δ_x|` over the given decisions.
    pub fn identity_error(&self, decisions: &[Decision]) -> f64 {
        decisions
            .iter()
            .map(|x| (self.q.dot(&self.lift(x)) - self.gap(x)).abs())
            .fold(0.0, f64::max)
    }
}

/// Builds `(M, q, w̄)` from a hull and checks `qᵀlift(x) = Δ_x` on `x*` and
/// on one witness per lifted coordinate.
pub fn reduce(set: &DecisionSet, hull: HullRep, theta: &Theta, gaps: GapProfile) -> Result<ReducedProblem> {
    let d = hull.dim();
    if theta.dim() != d || set.dim() != d {
        return Err(GlError::DimensionMismatch { expected: d, actual: theta.dim() });
    }
    let a = hull.a();
    let b = hull.b();
    let dp = hull.lifted_dim();
    let mut theta_lifted = DVector::zeros(dp);
    for (i, &t) in theta.values().iter().enumerate() {
        theta_lifted[i] = t as f64;
    }
    let bb = b.norm_squared();
    let (m, q) = if bb == 0.0 {
        (a.clone(), -theta_lifted)
    } else {
        let r = a.tr_mul(b) / bb;
        let m = a - b * r.transpose();
        let q = r * gaps.opt_value as f64 - theta_lifted;
        (m, q)
    };
    let m_norm = (gaps.m as f64 * theta.norm_inf() as f64).max(1.0);
    let problem = ReducedProblem {
        hull,
        m,
        q,
        w_floor: m_norm.powi(-2),
        items: gaps.suboptimal.clone(),
        theta: theta.clone(),
        gaps,
    };
    let mut sample = vec![problem.gaps.x_star.clone()];
    sample.extend(problem.hull.lifted_witnesses(set)?.into_iter().flatten());
    let scale = 1.0 + problem.gaps.opt_value as f64;
    for x in &sample {
        let z = problem.lift(x);
        let err = (problem.q.dot(&z) - problem.gap(x)).abs();
        let hull_err = (&problem.m * &z).amax();
        if err > IDENTITY_TOL * scale || hull_err > IDENTITY_TOL * scale {
            return Err(GlError::IdentityViolation { decision: x.to_string(), error: err.max(hull_err) });
        }
    }
    Ok(problem)
}

/// `h_x(w) = Σ_{i∈I} x_i/w_i − Δ_x²`.
pub fn violation(w: &[f64], x: &Decision, items: &[usize], delta: f64) -> Result<f64> {
    let mut s = 0.0;
    for &i in items {
        if x.get(i) {
            if !(w[i] > 0.0) {
                return Err(GlError::DivisionGuard(i));
            }
            s += 1.0 / w[i];
        }
    }
    Ok(s - delta * delta)
}

/// `∇h_x(w)`: `−x_i/w_i²` on `I`, zero elsewhere (length `w.len()`).
pub fn violation_gradient(w: &[f64], x: &Decision, items: &[usize]) -> Result<DVector<f64>> {
    let mut g = DVector::zeros(w.len());
    for &i in items {
        if x.get(i) {
            if !(w[i] > 0.0) {
                return Err(GlError::DivisionGuard(i));
            }
            g[i] = -1.0 / (w[i] * w[i]);
        }
    }
    Ok(g)
}

/// Tolerances of the projection.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProjectionConfig {
    pub feas_tol: f64,
    pub kkt_tol: f64,
    pub max_newton: usize,
    /// Weight of the interior point in the barrier warm start.
    pub blend: f64,
}

impl Default for ProjectionConfig {
    fn default() -> Self {
        Self { feas_tol: 1e-9, kkt_tol: 1e-6, max_newton: 2000, blend: 0.05 }
    }
}

/// `{w : Mw = 0, w ≥ 0, w_i ≥ w̄ for i ∈ I}` in the lifted space.
#[derive(Clone, Debug)]
pub struct FeasibleRegion {
    m: DMatrix<f64>,
    lower: DVector<f64>,
    /// Coordinates that vanish on the whole region.
    fixed: Vec<bool>,
    /// Orthonormal basis of `{Mw = 0, w_fixed = 0}`.
    basis: DMatrix<f64>,
    /// Strictly feasible point.
    interior: DVector<f64>,
    /// `M = 0` and nothing fixed beyond bounds: projection is a clamp.
    separable: bool,
}

impl FeasibleRegion {
    pub fn new(problem: &ReducedProblem, set: &DecisionSet) -> Result<Self> {
        let dp = problem.lifted_dim();
        let mut lower = DVector::zeros(dp);
        for &i in &problem.items {
            lower[i] = problem.w_floor;
        }
        let witnesses = problem.hull.lifted_witnesses(set)?;
        let lifts: Vec<Option<DVector<f64>>> = witnesses.iter().map(|w| w.as_ref().map(|x| problem.lift(x))).collect();
        Self::from_parts(problem.m.clone(), lower, &lifts)
    }

    /// Region from `M`, the lower bounds, and for each coordinate an
    /// optional point of the cone that is positive there.
    pub fn from_parts(m: DMatrix<f64>, lower: DVector<f64>, witnesses: &[Option<DVector<f64>>]) -> Result<Self> {
        let dp = m.ncols();
        if lower.len() != dp || witnesses.len() != dp {
            return Err(GlError::DimensionMismatch { expected: dp, actual: lower.len() });
        }
        let fixed: Vec<bool> = witnesses.iter().map(Option::is_none).collect();
        if let Some(j) = (0..dp).find(|&j| fixed[j] && lower[j] > 0.0) {
            return Err(GlError::Uncovered(vec![j]));
        }
        // Any positive scale gives an interior point of the cone part; use 1
        // when no coordinate carries a lower bound.
        let floor = if lower.max() > 0.0 { lower.max() } else { 1.0 };
        let mut interior = DVector::zeros(dp);
        for z in witnesses.iter().flatten() {
            interior += z;
        }
        // Every non-fixed coordinate is ≥ 1 in the sum of witnesses.
        interior *= 2.0 * floor;
        let zero_m = m.iter().all(|v| *v == 0.0);
        let rows: Vec<usize> = (0..dp).filter(|&j| fixed[j]).collect();
        let mut constraints = DMatrix::zeros(m.nrows() + rows.len(), dp);
        constraints.view_mut((0, 0), (m.nrows(), dp)).copy_from(&m);
        for (k, &j) in rows.iter().enumerate() {
            constraints[(m.nrows() + k, j)] = 1.0;
        }
        let basis = linalg::null_space(&constraints, 1e-12);
        Ok(Self { m, lower, fixed, basis, interior, separable: zero_m })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn lower(&self) -> &DVector<f64> {
        &self.lower
    }

    pub fn interior(&self) -> &DVector<f64> {
        &self.interior
    }

    pub fn fixed(&self) -> &[bool] {
        &self.fixed
    }

    pub fn dim(&self) -> usize {
        self.m.ncols()
    }

    /// Largest violation of `Mw = 0`, the bounds, and the fixed zeros.
    pub fn infeasibility(&self, w: &DVector<f64>) -> f64 {
        let eq = if self.m.nrows() == 0 { 0.0 } else { (&self.m * w).amax() };
        let bounds = (0..w.len()).map(|j| (self.lower[j] - w[j]).max(0.0)).fold(0.0, f64::max);
        let fixed = (0..w.len()).filter(|&j| self.fixed[j]).map(|j| w[j].abs()).fold(0.0, f64::max);
        eq.max(bounds).max(fixed)
    }

    fn constrained(&self) -> Vec<usize> {
        (0..self.dim()).filter(|&j| !self.fixed[j]).collect()
    }
}

/// Stateful projector; remembers the last active set and output to warm
/// start the next call.
#[derive(Clone, Debug)]
pub struct Projector {
    region: FeasibleRegion,
    config: ProjectionConfig,
    active: Vec<usize>,
    last: Option<DVector<f64>>,
    pub stats: ProjectionStats,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ProjectionStats {
    pub calls: usize,
    pub active_set_hits: usize,
    pub barrier_runs: usize,
    pub newton_steps: usize,
}

impl Projector {
    pub fn new(region: FeasibleRegion) -> Self {
        Self::with_config(region, ProjectionConfig::default())
    }

    pub fn with_config(region: FeasibleRegion, config: ProjectionConfig) -> Self {
        Self { region, config, active: Vec::new(), last: None, stats: ProjectionStats::default() }
    }

    pub fn region(&self) -> &FeasibleRegion {
        &self.region
    }

    /// `argmin_{w ∈ region} ‖w − y‖²`.
    pub fn project(&mut self, y: &DVector<f64>) -> Result<DVector<f64>> {
        let r = &self.region;
        if y.len() != r.dim() {
            return Err(GlError::DimensionMismatch { expected: r.dim(), actual: y.len() });
        }
        self.stats.calls += 1;
        if r.separable {
            let w = DVector::from_fn(y.len(), |j, _| if r.fixed[j] { 0.0 } else { y[j].max(r.lower[j]) });
            return Ok(w);
        }
        let n = &r.basis;
        let z0 = n.tr_mul(y);
        let cons = r.constrained();
        let scale = 1.0 + z0.amax().max(r.interior.amax());
        let tol = self.config.feas_tol * scale;

        // Active-set attempts, warm-started from the previous call.
        let mut active = self.active.clone();
        for _ in 0..6 {
            let Some(z) = self.equality_solve(&z0, &active) else { break };
            let s = self.slacks(&z, &cons);
            let violated: Vec<usize> = cons.iter().zip(s.iter()).filter(|(_, &sj)| sj < -tol).map(|(&j, _)| j).collect();
            if violated.is_empty() {
                match self.multipliers(&z, &z0, &active) {
                    Some(mu) if mu.iter().all(|&v| v >= -self.config.kkt_tol * scale) => {
                        self.stats.active_set_hits += 1;
                        return Ok(self.finish(z, active));
                    }
                    Some(mu) => {
                        let (k, _) = mu.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)).unwrap();
                        active.remove(k);
                    }
                    None => break,
                }
            } else {
                for j in violated {
                    if !active.contains(&j) {
                        active.push(j);
                    }
                }
                active.sort_unstable();
            }
        }

        let z = self.barrier(&z0, &cons, scale)?;
        let s = self.slacks(&z, &cons);
        // Identify the active set from the barrier point and polish.
        let gap_tol = 1e-6 * scale;
        let guess: Vec<usize> = cons.iter().zip(s.iter()).filter(|(_, &sj)| sj <= gap_tol).map(|(&j, _)| j).collect();
        if let Some(zp) = self.equality_solve(&z0, &guess) {
            let sp = self.slacks(&zp, &cons);
            let feasible = sp.iter().all(|&v| v >= -tol);
            let dual_ok = self
                .multipliers(&zp, &z0, &guess)
                .is_some_and(|mu| mu.iter().all(|&v| v >= -self.config.kkt_tol * scale));
            if feasible && dual_ok {
                return Ok(self.finish(zp, guess));
            }
        }
        Ok(self.finish(z, guess))
    }

    fn finish(&mut self, z: DVector<f64>, active: Vec<usize>) -> DVector<f64> {
        let r = &self.region;
        let mut w = &r.basis * z;
        for j in 0..w.len() {
            if r.fixed[j] {
                w[j] = 0.0;
            } else if w[j] < r.lower[j] && r.lower[j] - w[j] <= 1e-12 * (1.0 + r.lower[j]) {
                w[j] = r.lower[j];
            }
        }
        self.active = active;
        self.last = Some(w.clone());
        w
    }

    fn slacks(&self, z: &DVector<f64>, cons: &[usize]) -> Vec<f64> {
        let r = &self.region;
        cons.iter().map(|&j| r.basis.row(j).dot(&z.transpose()) - r.lower[j]).collect()
    }

    /// Projection of `z0` onto `{N_j z = lower_j, j ∈ active}`.
    fn equality_solve(&self, z0: &DVector<f64>, active: &[usize]) -> Option<DVector<f64>> {
        if active.is_empty() {
            return Some(z0.clone());
        }
        let r = &self.region;
        let na = DMatrix::from_fn(active.len(), r.basis.ncols(), |k, c| r.basis[(active[k], c)]);
        let rhs = DVector::from_fn(active.len(), |k, _| r.lower[active[k]]) - &na * z0;
        let svd = na.clone().svd(true, true);
        let step = svd.solve(&rhs, 1e-12).ok()?;
        let z = z0 + step;
        // Inconsistent active sets leave a residual.
        ((&na * &z - DVector::from_fn(active.len(), |k, _| r.lower[active[k]])).amax() <= 1e-9 * (1.0 + z.amax()))
            .then_some(z)
    }

    /// Nonnegative multipliers `μ` with `z − z0 = N_Aᵀμ`, or signed ones if
    /// no nonnegative combination fits.
    fn multipliers(&self, z: &DVector<f64>, z0: &DVector<f64>, active: &[usize]) -> Option<Vec<f64>> {
        let diff = z - z0;
        if active.is_empty() {
            return (diff.amax() <= 1e-12).then(Vec::new);
        }
        let r = &self.region;
        let nat = DMatrix::from_fn(r.basis.ncols(), active.len(), |c, k| r.basis[(active[k], c)]);
        let scale = 1.0 + diff.amax();
        if let Ok(mu) = linalg::nnls(&nat, &diff, 50 * active.len() + 50) {
            if (&nat * &mu - &diff).amax() <= 1e-9 * scale {
                return Some(mu.iter().copied().collect());
            }
        }
        let mu = nat.svd(true, true).solve(&diff, 1e-12).ok()?;
        Some(mu.iter().copied().collect())
    }

    /// Path-following log-barrier Newton method in null-space coordinates.
    fn barrier(&mut self, z0: &DVector<f64>, cons: &[usize], scale: f64) -> Result<DVector<f64>> {
        self.stats.barrier_runs += 1;
        let r = &self.region;
        let n = &r.basis;
        let nc = DMatrix::from_fn(cons.len(), n.ncols(), |k, c| n[(cons[k], c)]);
        let lc = DVector::from_fn(cons.len(), |k, _| r.lower[cons[k]]);
        let strictly = |z: &DVector<f64>| (&nc * z - &lc).iter().all(|&s| s > 0.0);

        let kappa = self.config.blend;
        let mut z = match &self.last {
            Some(prev) => {
                let cand = n.tr_mul(&(prev * (1.0 - kappa) + &r.interior * kappa));
                if strictly(&cand) {
                    cand
                } else {
                    n.tr_mul(&r.interior)
                }
            }
            None => n.tr_mul(&r.interior),
        };
        if !strictly(&z) {
            return Err(GlError::NumericFailure("no strictly feasible start for the projection".into()));
        }
        let m_c = cons.len().max(1) as f64;
        let mut tau = (1.0 + (&z - z0).norm_squared()) / m_c;
        let tau_end = 1e-10 * scale * scale;
        let mut newton = 0usize;
        loop {
            // Centering.
            for _ in 0..60 {
                newton += 1;
                if newton > self.config.max_newton {
                    self.stats.newton_steps += newton;
                    return Err(GlError::NumericFailure("projection barrier did not converge".into()));
                }
                let s = &nc * &z - &lc;
                let inv_s = s.map(|v| 1.0 / v);
                let grad = (&z - z0) - nc.tr_mul(&inv_s) * tau;
                let weights = inv_s.map(|v| v * v * tau);
                let mut h = nc.tr_mul(&DMatrix::from_fn(nc.nrows(), nc.ncols(), |k, c| nc[(k, c)] * weights[k]));
                for i in 0..h.nrows() {
                    h[(i, i)] += 1.0;
                }
                let Some(chol) = h.cholesky() else {
                    return Err(GlError::NumericFailure("singular barrier Hessian".into()));
                };
                let dz = -chol.solve(&grad);
                let decrement = -grad.dot(&dz);
                if decrement <= 1e-6 * tau * m_c + 1e-24 * scale * scale {
                    break;
                }
                let ds = &nc * &dz;
                let mut step: f64 = 1.0;
                for k in 0..s.len() {
                    if ds[k] < 0.0 {
                        step = step.min(-0.99 * s[k] / ds[k]);
                    }
                }
                let f = |z: &DVector<f64>| {
                    let s = &nc * z - &lc;
                    0.5 * (z - z0).norm_squared() - tau * s.iter().map(|v| v.ln()).sum::<f64>()
                };
                let f0 = f(&z);
                loop {
                    let cand = &z + &dz * step;
                    if strictly(&cand) && f(&cand) <= f0 - 0.25 * step * decrement {
                        z = cand;
                        break;
                    }
                    step *= 0.5;
                    if step < 1e-14 {
                        break;
                    }
                }
                if step < 1e-14 {
                    break;
                }
            }
            if tau <= tau_end {
                break;
            }
            tau = (tau * 0.1).max(tau_end);
        }
        self.stats.newton_steps += newton;
        Ok(z)
    }
}

/// One-shot projection onto a region.
pub fn project(region: &FeasibleRegion, y: &DVector<f64>) -> Result<DVector<f64>> {
    Projector::new(region.clone()).project(y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::analyze;
    use crate::structures::hull_for_reduction;

    fn problem(set: &DecisionSet, theta: &[u64]) -> ReducedProblem {
        let th = Theta::new(theta.to_vec()).unwrap();
        let gaps = analyze(set, &th, 1000).unwrap();
        reduce(set, hull_for_reduction(set, 1000).unwrap(), &th, gaps).unwrap()
    }

    fn dag() -> DecisionSet {
        DecisionSet::path_dag(4, vec![(0, 1), (0, 2), (1, 3), (2, 3)], 0, 3).unwrap()
    }

    #[test]
    fn one_set_reduction() {
        let set = DecisionSet::mset(3, 1).unwrap();
        let p = problem(&set, &[3, 1, 2]);
        assert!(p.m.iter().all(|v| v.abs() < 1e-15));
        assert_eq!(p.q.as_slice(), &[0.0, 2.0, 1.0]);
        assert!((p.w_floor - 1.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn dag_reduction_identity() {
        let set = dag();
        let p = problem(&set, &[2, 1, 2, 1]);
        let all = set.enumerate(10).unwrap();
        for x in &all {
            assert!((&p.m * p.lift(x)).amax() < 1e-12);
        }
        assert!(p.identity_error(&all) < 1e-12);
        let low = Decision::new(vec![0, 1, 0, 1]).unwrap();
        assert!((p.q.dot(&p.lift(&low)) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn violation_examples() {
        let e2 = Decision::new(vec![0, 1, 0]).unwrap();
        assert_eq!(violation(&[1.0, 0.25, 1.0], &e2, &[1, 2], 2.0).unwrap(), 0.0);
        let e1 = Decision::new(vec![1, 0, 0]).unwrap();
        assert_eq!(violation(&[1.0, 0.25, 1.0], &e1, &[1, 2], 3.0).unwrap(), -9.0);
        let x = Decision::new(vec![0, 1, 1]).unwrap();
        assert_eq!(violation(&[1.0, 1.0, 1.0 / 16.0], &x, &[2], 1.0).unwrap(), 15.0);
        assert_eq!(violation(&[1.0, 0.0, 1.0], &e2, &[1], 1.0), Err(GlError::DivisionGuard(1)));
    }

    #[test]
    fn clamp_fast_path() {
        let set = DecisionSet::mset(3, 1).unwrap();
        let p = problem(&set, &[3, 1, 2]);
        let region = FeasibleRegion::new(&p, &set).unwrap();
        let w = project(&region, &DVector::from_vec(vec![-1.0, 0.05, 0.5])).unwrap();
        assert_eq!(w.as_slice(), &[0.0, 1.0 / 9.0, 0.5]);
    }

    #[test]
    fn dag_projection_recovers_point() {
        let set = dag();
        let p = problem(&set, &[2, 1, 2, 1]);
        let region = FeasibleRegion::new(&p, &set).unwrap();
        let x0 = DVector::from_vec(vec![0.7, 0.3, 0.7, 0.3]);
        // Row space of M is orthogonal to its null space.
        let perturb = p.m.tr_mul(&DVector::from_vec(vec![0.2, -0.1, 0.05]));
        let w = project(&region, &(&x0 + perturb)).unwrap();
        assert!((w - x0).amax() < 1e-6);
    }

    #[test]
    fn mset_projection_is_feasible_and_idempotent() {
        let set = DecisionSet::mset(4, 2).unwrap();
        let p = problem(&set, &[4, 3, 2, 1]);
        let region = FeasibleRegion::new(&p, &set).unwrap();
        let mut proj = Projector::new(region.clone());
        let y = DVector::from_vec(vec![0.3, -2.0, 1.5, 0.01, 0.2, 3.0, -1.0, 0.4]);
        let w = proj.project(&y).unwrap();
        assert!(region.infeasibility(&w) <= 1e-9);
        let w2 = proj.project(&w).unwrap();
        assert!((&w2 - &w).amax() <= 1e-9);
        let fresh = project(&region, &y).unwrap();
        assert!((fresh - &w).amax() <= 1e-7);
    }
}
