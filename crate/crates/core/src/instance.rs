//! Instance analysis: optimal decision, gaps, the suboptimal-item set `I`,
//! and discretization of real-valued parameters.

use serde::{Deserialize, Serialize};

use crate::error::{GlError, Result};
use crate::structures::{Decision, DecisionSet};

/// Relative distance to an integer under which `θ/ε` is snapped before the
/// ceiling, so that `3.0000000000000004` discretizes to 3 and not 4.
const SNAP_TOL: f64 = 1e-9;

/// Integer mean-reward vector, optionally remembering the real vector and
/// step it was discretized from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Theta {
    values: Vec<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    origin: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    epsilon: Option<f64>,
}

impl Theta {
    pub fn new(values: Vec<u64>) -> Result<Self> {
        if let Some(index) = values.iter().position(|&v| v == 0) {
            return Err(GlError::NonPositiveEntry { index, value: 0.0 });
        }
        Ok(Self { values, origin: None, epsilon: None })
    }

    pub fn values(&self) -> &[u64] {
        &self.values
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn as_f64(&self) -> Vec<f64> {
        self.values.iter().map(|&v| v as f64).collect()
    }

    pub fn norm_inf(&self) -> u64 {
        self.values.iter().copied().max().unwrap_or(0)
    }

    pub fn origin(&self) -> Option<&[f64]> {
        self.origin.as_deref()
    }

    pub fn epsilon(&self) -> Option<f64> {
        self.epsilon
    }

    /// Restriction to the given coordinates.
    pub fn select(&self, kept: &[usize]) -> Self {
        Self {
            values: kept.iter().map(|&i| self.values[i]).collect(),
            origin: self.origin.as_ref().map(|o| kept.iter().map(|&i| o[i]).collect()),
            epsilon: self.epsilon,
        }
    }
}

/// Optimal decision and gap data of an instance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapProfile {
    pub x_star: Decision,
    pub opt_value: u64,
    /// Smallest positive gap. Exact when `gaps_exact`, otherwise the lower
    /// bound 1 valid for integer θ.
    pub delta_min: f64,
    /// Largest gap. Exact when `gaps_exact`, otherwise the bound `m‖θ‖∞`.
    pub delta_max: f64,
    pub gaps_exact: bool,
    pub m: usize,
    /// Items appearing in no optimal decision (0-based, sorted).
    pub suboptimal: Vec<usize>,
}

impl GapProfile {
    /// `Δ_x = θᵀx* − θᵀx`.
    pub fn gap(&self, theta: &Theta, x: &Decision) -> f64 {
        self.opt_value as f64 - x.dot_int(theta.values()) as f64
    }

    pub fn in_i(&self, i: usize) -> bool {
        self.suboptimal.binary_search(&i).is_ok()
    }
}

pub fn gap(profile: &GapProfile, theta: &Theta, x: &Decision) -> f64 {
    profile.gap(theta, x)
}

/// Computes `x*`, `I` and gap bounds. Gaps are exact when `|X| ≤ cap`.
pub fn analyze(set: &DecisionSet, theta: &Theta, cap: usize) -> Result<GapProfile> {
    check_dim(set, theta)?;
    let x_star = set.linear_max(&theta.as_f64())?;
    let opt_value = x_star.dot_int(theta.values());
    let m = set.max_size()?;
    let suboptimal = suboptimal_items(set, theta)?;
    let bound = (m as u64 * theta.norm_inf()) as f64;
    let (delta_min, delta_max, gaps_exact) = match set.enumerate(cap) {
        Ok(all) => {
            let gaps: Vec<f64> = all
                .iter()
                .map(|x| (opt_value - x.dot_int(theta.values())) as f64)
                .filter(|&g| g > 0.0)
                .collect();
            let lo = gaps.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = gaps.iter().copied().fold(0.0, f64::max);
            // With a single optimal value there is no positive gap; keep the
            // integer bounds so downstream formulas stay finite.
            if gaps.is_empty() {
                (1.0, bound.max(1.0), true)
            } else {
                (lo, hi, true)
            }
        }
        Err(GlError::TooLarge { .. }) => (1.0, bound.max(1.0), false),
        Err(e) => return Err(e),
    };
    Ok(GapProfile { x_star, opt_value, delta_min, delta_max, gaps_exact, m, suboptimal })
}

/// Items that appear in no optimal decision, found with one linear
/// maximization per item on `θ + 2d‖θ‖∞ eⁱ`.
pub fn suboptimal_items(set: &DecisionSet, theta: &Theta) -> Result<Vec<usize>> {
    check_dim(set, theta)?;
    let d = set.dim();
    let base = theta.as_f64();
    let opt = set.linear_max(&base)?.dot_int(theta.values());
    let boost = 2.0 * d as f64 * theta.norm_inf() as f64;
    let mut out = Vec::new();
    for i in 0..d {
        let mut a = base.clone();
        a[i] += boost;
        let y = set.linear_max(&a)?;
        if y.dot_int(theta.values()) < opt {
            out.push(i);
        }
    }
    Ok(out)
}

/// `(⌈θ₁/ε⌉, …, ⌈θ_d/ε⌉)` together with its origin.
pub fn discretize(theta_real: &[f64], epsilon: f64) -> Result<Theta> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(GlError::InvalidParameter(format!("epsilon must be positive, got {epsilon}")));
    }
    let mut values = Vec::with_capacity(theta_real.len());
    for (index, &v) in theta_real.iter().enumerate() {
        if !(v > 0.0 && v.is_finite()) {
            return Err(GlError::NonPositiveEntry { index, value: v });
        }
        let r = v / epsilon;
        let near = r.round();
        let k = if (r - near).abs() <= SNAP_TOL * r.max(1.0) { near } else { r.ceil() };
        values.push(k.max(1.0) as u64);
    }
    Ok(Theta { values, origin: Some(theta_real.to_vec()), epsilon: Some(epsilon) })
}

/// Whether a discretization step is small enough for the inflation bound.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscretizationCheck {
    /// Smallest positive gap of the real instance, when enumerable.
    pub delta_min: Option<f64>,
    pub m: usize,
    /// `ε ≤ Δmin/(2m)` holds.
    pub certified: bool,
    pub warning: Option<String>,
}

pub fn check_discretization(set: &DecisionSet, theta_real: &[f64], epsilon: f64, cap: usize) -> Result<DiscretizationCheck> {
    if theta_real.len() != set.dim() {
        return Err(GlError::DimensionMismatch { expected: set.dim(), actual: theta_real.len() });
    }
    let m = set.max_size()?;
    let delta_min = real_delta_min(set, theta_real, cap)?;
    let (certified, warning) = match delta_min {
        Some(dm) if epsilon <= dm / (2.0 * m as f64) => (true, None),
        Some(dm) => (
            false,
            Some(format!("epsilon {epsilon} exceeds delta_min/(2m) = {}; the inflation bound is not certified", dm / (2.0 * m as f64))),
        ),
        None => (false, Some("delta_min of the real instance is unknown; the inflation bound is not certified".into())),
    };
    Ok(DiscretizationCheck { delta_min, m, certified, warning })
}

/// Smallest positive gap of a real-valued instance by enumeration; `None`
/// when the set is too large or every decision is optimal.
pub fn real_delta_min(set: &DecisionSet, theta_real: &[f64], cap: usize) -> Result<Option<f64>> {
    let all = match set.enumerate(cap) {
        Ok(all) => all,
        Err(GlError::TooLarge { .. }) => return Ok(None),
        Err(e) => return Err(e),
    };
    let values: Vec<f64> = all.iter().map(|x| x.dot(theta_real)).collect();
    let opt = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let tol = 1e-12 * (1.0 + opt.abs());
    Ok(values.iter().map(|v| opt - v).filter(|&g| g > tol).reduce(f64::min))
}

/// `(1 + 2mε/Δmin)²`.
pub fn inflation_factor(m: usize, epsilon: f64, delta_min: f64) -> f64 {
    (1.0 + 2.0 * m as f64 * epsilon / delta_min).powi(2)
}

/// Scales a feasible solution of the discretized problem so that it is
/// feasible for the real one.
pub fn inflate_discretized_solution(values: &[f64], m: usize, epsilon: f64, delta_min: f64) -> Vec<f64> {
    let f = inflation_factor(m, epsilon, delta_min);
    values.iter().map(|v| v * f).collect()
}

fn check_dim(set: &DecisionSet, theta: &Theta) -> Result<()> {
    if theta.dim() != set.dim() {
        return Err(GlError::DimensionMismatch { expected: set.dim(), actual: theta.dim() });
    }
    Ok(())
}
