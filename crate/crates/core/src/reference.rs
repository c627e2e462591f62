//! Independent reference solvers for small instances.
//!
//! `brute_force_gl` works directly on the allocation `α ∈ R^{|X|}` with every
//! constraint listed, and solves it with a log-barrier interior-point method.
//! It shares no code with the GLPG pipeline beyond enumeration.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{GlError, Result};
use crate::structures::{Decision, DecisionSet};

/// Largest decision set the brute-force solver accepts.
pub const BRUTE_FORCE_CAP: usize = 500;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    ClosedForm,
    Barrier,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BruteForceResult {
    /// Optimal value `C(θ)`.
    pub c: f64,
    /// Optimal rates `w = Σ_x α_x x` (original coordinates).
    pub w: Vec<f64>,
    /// Decisions with positive weight.
    pub alpha: Vec<(Decision, f64)>,
    /// `Δ_x² − Σ_{i∈I} x_i/w_i` for every enumerated decision, in
    /// enumeration order.
    pub slacks: Vec<f64>,
    /// Bound on the distance to the optimum.
    pub gap_bound: f64,
    pub method: Method,
}

/// Exact optimum of the lower-bound program over enumerated decisions.
pub fn brute_force_gl(set: &DecisionSet, theta: &[f64], tol: f64) -> Result<BruteForceResult> {
    brute_force_gl_with_cap(set, theta, tol, BRUTE_FORCE_CAP)
}

pub fn brute_force_gl_with_cap(set: &DecisionSet, theta: &[f64], tol: f64, cap: usize) -> Result<BruteForceResult> {
    if theta.len() != set.dim() {
        return Err(GlError::DimensionMismatch { expected: set.dim(), actual: theta.len() });
    }
    let all = set.enumerate(cap)?;
    let info = Enumerated::new(&all, theta);
    let d = set.dim();
    if info.items.is_empty() {
        return Ok(BruteForceResult {
            c: 0.0,
            w: vec![0.0; d],
            alpha: Vec::new(),
            slacks: info.gaps.iter().map(|g| g * g).collect(),
            gap_bound: 0.0,
            method: Method::Barrier,
        });
    }
    if let Some(i) = info.items.iter().find(|&&i| !all.iter().any(|x| x.get(i))) {
        return Err(GlError::Uncovered(vec![*i]));
    }
    // Variables and constraints: decisions touching I. The others either
    // cost without helping or impose nothing.
    let touching: Vec<usize> = (0..all.len()).filter(|&k| info.items.iter().any(|&i| all[k].get(i))).collect();
    let ni = info.items.len();
    let nv = touching.len();
    let y = DMatrix::from_fn(ni, nv, |r, c| if all[touching[c]].get(info.items[r]) { 1.0 } else { 0.0 });
    let cost = DVector::from_fn(nv, |c, _| info.gaps[touching[c]]);
    let bound = DVector::from_fn(nv, |c, _| info.gaps[touching[c]].powi(2));

    let delta_min = cost.min();
    let m = all.iter().map(Decision::count).max().unwrap_or(1) as f64;
    let mut alpha = DVector::from_element(nv, 2.0 * m / (delta_min * delta_min));
    let n_barriers = (2 * nv) as f64;

    let barrier = Barrier { y: &y, cost: &cost, bound: &bound };
    let mut t = 1.0 / (1.0 + cost.dot(&alpha));
    let target_gap = tol.max(1e-14) * 1e-2;
    let mut newton_total = 0;
    loop {
        for _ in 0..200 {
            newton_total += 1;
            let (grad, step) = barrier.newton(&alpha, t)?;
            let decrement = -grad.dot(&step);
            if decrement <= 1e-18 {
                break;
            }
            let mut s: f64 = 1.0;
            for k in 0..nv {
                if step[k] < 0.0 {
                    s = s.min(-0.99 * alpha[k] / step[k]);
                }
            }
            let f0 = barrier.value(&alpha, t).expect("iterate is strictly feasible");
            let mut moved = false;
            while s > 1e-16 {
                let cand = &alpha + &step * s;
                if let Some(f) = barrier.value(&cand, t) {
                    if f <= f0 - 0.25 * s * decrement {
                        alpha = cand;
                        moved = true;
                        break;
                    }
                }
                s *= 0.5;
            }
            if !moved || decrement <= 1e-12 {
                break;
            }
        }
        if n_barriers / t <= target_gap || newton_total > 20_000 {
            break;
        }
        t *= 8.0;
    }
    let gap_bound = n_barriers / t;
    if gap_bound > tol {
        return Err(GlError::NumericFailure(format!("barrier stopped with gap bound {gap_bound:e}")));
    }
    let mut w = vec![0.0; d];
    let mut support = Vec::new();
    for (c, &k) in touching.iter().enumerate() {
        for i in all[k].support() {
            w[i] += alpha[c];
        }
        if alpha[c] > 1e-12 * alpha.amax() {
            support.push((all[k].clone(), alpha[c]));
        }
    }
    let slacks = info.slacks(&all, &w);
    Ok(BruteForceResult { c: cost.dot(&alpha), w, alpha: support, slacks, gap_bound, method: Method::Barrier })
}

struct Barrier<'a> {
    y: &'a DMatrix<f64>,
    cost: &'a DVector<f64>,
    bound: &'a DVector<f64>,
}

impl Barrier<'_> {
    /// `t·Δᵀα − Σ_c log(Δ_c² − Σ_i x_ci/w_i) − Σ log α`, or `None` outside
    /// the domain.
    fn value(&self, alpha: &DVector<f64>, t: f64) -> Option<f64> {
        if alpha.iter().any(|&a| a <= 0.0) {
            return None;
        }
        let w = self.y * alpha;
        let inv = w.map(|v| 1.0 / v);
        let s = self.y.tr_mul(&inv);
        let mut f = t * self.cost.dot(alpha);
        for c in 0..s.len() {
            let g = self.bound[c] - s[c];
            if g <= 0.0 {
                return None;
            }
            f -= g.ln();
        }
        Some(f - alpha.iter().map(|a| a.ln()).sum::<f64>())
    }

    /// Gradient and Newton step, with the Hessian `diag(1/α²) + Yᵀ H_w Y`
    /// inverted through the Woodbury identity in `|I|` dimensions.
    fn newton(&self, alpha: &DVector<f64>, t: f64) -> Result<(DVector<f64>, DVector<f64>)> {
        let y = self.y;
        let ni = y.nrows();
        let w = y * alpha;
        let inv = w.map(|v| 1.0 / v);
        let s = y.tr_mul(&inv);
        let g = DVector::from_fn(s.len(), |c, _| self.bound[c] - s[c]);
        // Derivatives with respect to w, summed over constraints.
        let mut grad_w = DVector::zeros(ni);
        let mut h_w = DMatrix::zeros(ni, ni);
        for c in 0..g.len() {
            let u = DVector::from_fn(ni, |i, _| y[(i, c)] * inv[i] * inv[i]);
            grad_w -= &u / g[c];
            h_w.ger(1.0 / (g[c] * g[c]), &u, &u, 1.0);
            for i in 0..ni {
                if y[(i, c)] > 0.0 {
                    h_w[(i, i)] += 2.0 * inv[i].powi(3) / g[c];
                }
            }
        }
        let grad = self.cost * t + y.tr_mul(&grad_w) - alpha.map(|a| 1.0 / a);
        let chol = h_w
            .cholesky()
            .ok_or_else(|| GlError::NumericFailure("reference Hessian is not positive definite".into()))?;
        let v = y.tr_mul(&chol.l());
        let dinv = alpha.map(|a| a * a);
        let dv = DMatrix::from_fn(v.nrows(), v.ncols(), |r, c| v[(r, c)] * dinv[r]);
        let mut small = v.tr_mul(&dv);
        for i in 0..ni {
            small[(i, i)] += 1.0;
        }
        let small = small
            .cholesky()
            .ok_or_else(|| GlError::NumericFailure("reference capacitance matrix is singular".into()))?;
        let rhs = -&grad;
        let d_rhs = rhs.component_mul(&dinv);
        let corr = &dv * small.solve(&v.tr_mul(&d_rhs));
        Ok((grad, d_rhs - corr))
    }
}

/// Enumerated gap data, computed without the instance module.
struct Enumerated {
    gaps: Vec<f64>,
    items: Vec<usize>,
}

impl Enumerated {
    fn new(all: &[Decision], theta: &[f64]) -> Self {
        let values: Vec<f64> = all.iter().map(|x| x.dot(theta)).collect();
        let opt = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let tol = 1e-12 * (1.0 + opt.abs());
        let gaps: Vec<f64> = values.iter().map(|v| if opt - v <= tol { 0.0 } else { opt - v }).collect();
        let d = theta.len();
        let items = (0..d)
            .filter(|&i| all.iter().zip(&gaps).all(|(x, &g)| !(x.get(i) && g == 0.0)))
            .collect();
        Self { gaps, items }
    }

    fn slacks(&self, all: &[Decision], w: &[f64]) -> Vec<f64> {
        all.iter()
            .zip(&self.gaps)
            .map(|(x, g)| {
                let s: f64 = self.items.iter().filter(|&&i| x.get(i)).map(|&i| 1.0 / w[i]).sum();
                g * g - s
            })
            .collect()
    }
}

/// `C = Σ_{i∈I} 1/Δ_i` with `α_i = 1/Δ_i²` for single-item decisions.
pub fn closed_form_1set(theta: &[f64]) -> BruteForceResult {
    let d = theta.len();
    let opt = theta.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let tol = 1e-12 * (1.0 + opt.abs());
    let mut w = vec![0.0; d];
    let mut alpha = Vec::new();
    let mut c = 0.0;
    let mut slacks = Vec::with_capacity(d);
    for i in 0..d {
        let gap = opt - theta[i];
        if gap > tol {
            w[i] = 1.0 / (gap * gap);
            alpha.push((Decision::from_support(d, &[i]), w[i]));
            c += 1.0 / gap;
            slacks.push(0.0);
        } else {
            slacks.push(0.0);
        }
    }
    BruteForceResult { c, w, alpha, slacks, gap_bound: 0.0, method: Method::ClosedForm }
}

/// `max_x h_x(w)` over the enumerated suboptimal decisions, with `w` in
/// original coordinates. Optimal decisions are skipped since their
/// constraint reads `0 ≤ 0`; `−∞` when every decision is optimal, `+∞` when
/// some explored item has a non-positive rate.
pub fn check_feasible(set: &DecisionSet, theta: &[f64], w: &[f64], cap: usize) -> Result<f64> {
    if theta.len() != set.dim() || w.len() != set.dim() {
        return Err(GlError::DimensionMismatch { expected: set.dim(), actual: w.len() });
    }
    let all = set.enumerate(cap)?;
    let info = Enumerated::new(&all, theta);
    let mut worst = f64::NEG_INFINITY;
    for (x, g) in all.iter().zip(&info.gaps).filter(|(_, &g)| g > 0.0) {
        let mut s = 0.0;
        for &i in info.items.iter().filter(|&&i| x.get(i)) {
            s += if w[i] > 0.0 { 1.0 / w[i] } else { f64::INFINITY };
        }
        worst = worst.max(s - g * g);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_examples() {
        assert!((closed_form_1set(&[3.0, 1.0, 2.0]).c - 1.5).abs() < 1e-15);
        assert!((closed_form_1set(&[5.0, 4.0]).c - 1.0).abs() < 1e-15);
        assert_eq!(closed_form_1set(&[2.0, 2.0, 2.0]).c, 0.0);
    }

    #[test]
    fn brute_force_examples() {
        let set = DecisionSet::mset(3, 1).unwrap();
        let r = brute_force_gl(&set, &[3.0, 1.0, 2.0], 1e-9).unwrap();
        assert!((r.c - 1.5).abs() < 1e-7, "{}", r.c);
        assert!((r.w[1] - 0.25).abs() < 1e-6 && (r.w[2] - 1.0).abs() < 1e-6);
        let set = DecisionSet::mset(3, 2).unwrap();
        let r = brute_force_gl(&set, &[2.0, 2.0, 1.0], 1e-9).unwrap();
        assert!((r.c - 1.0).abs() < 1e-7, "{}", r.c);
        let set = DecisionSet::mset(2, 1).unwrap();
        assert_eq!(brute_force_gl(&set, &[1.0, 1.0], 1e-9).unwrap().c, 0.0);
    }

    #[test]
    fn feasibility_checks() {
        let set = DecisionSet::mset(3, 1).unwrap();
        let theta = [3.0, 1.0, 2.0];
        let w = closed_form_1set(&theta).w;
        assert!(check_feasible(&set, &theta, &w, 100).unwrap().abs() < 1e-12);
        let doubled: Vec<f64> = w.iter().map(|v| 2.0 * v).collect();
        assert!(check_feasible(&set, &theta, &doubled, 100).unwrap() < 0.0);
        let halved = vec![w[0], w[1] / 2.0, w[2]];
        assert!(check_feasible(&set, &theta, &halved, 100).unwrap() > 0.0);
    }
}
