//! Lifted equality-form convex hulls `conv(X) = {z : Az = b, z ≥ 0}`.
//!
//! Inequality facets are turned into equalities with slack coordinates
//! appended after the `d` original ones, so every decision `x` has a lifted
//! image `lift(x)` whose first `d` entries are `x` itself.

use nalgebra::{DMatrix, DVector};

use super::{Decision, DecisionSet};
use crate::error::{GlError, Result};
use crate::linalg;

/// Bases tried when checking whether an explicit set has a compact hull.
const EXPLICIT_VERTEX_BASES: usize = 100_000;

/// How lifted coordinates beyond the first `d` are derived from a decision.
#[derive(Clone, Debug, PartialEq)]
pub enum LiftRule {
    /// No extra coordinates.
    Identity,
    /// Slack `k` equals `1 − Σ_{e ∈ groups[k]} x_e`.
    Slack { groups: Vec<Vec<usize>> },
    /// Coordinate `d + k` is the indicator of `x == vertices[k]`.
    Barycentric { vertices: Vec<Decision> },
}

#[derive(Clone, Debug, PartialEq)]
pub struct HullRep {
    a: DMatrix<f64>,
    b: DVector<f64>,
    d: usize,
    rule: LiftRule,
}

impl HullRep {
    pub fn new(a: DMatrix<f64>, b: DVector<f64>, d: usize, rule: LiftRule) -> Result<Self> {
        let extra = match &rule {
            LiftRule::Identity => 0,
            LiftRule::Slack { groups } => groups.len(),
            LiftRule::Barycentric { vertices } => vertices.len(),
        };
        if a.ncols() != d + extra || a.nrows() != b.len() {
            return Err(GlError::DimensionMismatch { expected: d + extra, actual: a.ncols() });
        }
        Ok(Self { a, b, d, rule })
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn b(&self) -> &DVector<f64> {
        &self.b
    }

    /// Number of original coordinates.
    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn lifted_dim(&self) -> usize {
        self.a.ncols()
    }

    pub fn rule(&self) -> &LiftRule {
        &self.rule
    }

    pub fn lift(&self, x: &Decision) -> DVector<f64> {
        let mut z = DVector::zeros(self.lifted_dim());
        for i in x.support() {
            z[i] = 1.0;
        }
        match &self.rule {
            LiftRule::Identity => {}
            LiftRule::Slack { groups } => {
                for (k, g) in groups.iter().enumerate() {
                    z[self.d + k] = 1.0 - g.iter().filter(|&&e| x.get(e)).count() as f64;
                }
            }
            LiftRule::Barycentric { vertices } => {
                if let Ok(k) = vertices.binary_search(x) {
                    z[self.d + k] = 1.0;
                }
            }
        }
        z
    }

    /// For each lifted coordinate, a decision whose lift is positive there.
    pub fn lifted_witnesses(&self, set: &DecisionSet) -> Result<Vec<Option<Decision>>> {
        let mut out = Vec::with_capacity(self.lifted_dim());
        for i in 0..self.d {
            let mut a = vec![0.0; self.d];
            a[i] = 1.0;
            let x = set.linear_max(&a)?;
            out.push(x.get(i).then_some(x));
        }
        match &self.rule {
            LiftRule::Identity => {}
            LiftRule::Slack { groups } => {
                for g in groups {
                    let mut a = vec![0.0; self.d];
                    for &e in g {
                        a[e] = -1.0;
                    }
                    let x = set.linear_max(&a)?;
                    out.push(g.iter().all(|&e| !x.get(e)).then_some(x));
                }
            }
            LiftRule::Barycentric { vertices } => out.extend(vertices.iter().cloned().map(Some)),
        }
        Ok(out)
    }

    /// Decision minimizing the lifted mass outside `allowed` (a mask over
    /// lifted coordinates), lexicographically smallest among minimizers.
    pub fn min_lifted_support(&self, set: &DecisionSet, allowed: &[bool]) -> Result<Decision> {
        match &self.rule {
            LiftRule::Barycentric { vertices } => {
                let cost = |k: usize, x: &Decision| {
                    x.support().filter(|&i| !allowed[i]).count() + usize::from(!allowed[self.d + k])
                };
                vertices
                    .iter()
                    .enumerate()
                    .min_by_key(|(k, x)| (cost(*k, x), *k))
                    .map(|(_, x)| x.clone())
                    .ok_or(GlError::EmptySet)
            }
            rule => {
                let mut a = vec![0.0; self.d];
                for i in (0..self.d).filter(|&i| !allowed[i]) {
                    a[i] -= 1.0;
                }
                if let LiftRule::Slack { groups } = rule {
                    for (k, g) in groups.iter().enumerate() {
                        if !allowed[self.d + k] {
                            for &e in g {
                                a[e] += 1.0;
                            }
                        }
                    }
                }
                set.linear_max(&a)
            }
        }
    }
}

/// Exact lifted hull of a decision set.
///
/// m-sets: `Σ w = m` plus `w_i + s_i = 1`. DAG paths: flow conservation with
/// unit outflow at the source. Bipartite matchings: vertex degree rows, with
/// one slack per vertex unless the matching is perfect. Explicit sets: the
/// affine hull when its nonnegative part has exactly the listed vertices,
/// otherwise a barycentric extended formulation.
pub fn hull(set: &DecisionSet, cap: usize) -> Result<HullRep> {
    match set {
        DecisionSet::MSet(s) => {
            let d = s.dim();
            let mut a = DMatrix::zeros(d + 1, 2 * d);
            let mut b = DVector::from_element(d + 1, 1.0);
            b[0] = s.m() as f64;
            for i in 0..d {
                a[(0, i)] = 1.0;
                a[(1 + i, i)] = 1.0;
                a[(1 + i, d + i)] = 1.0;
            }
            HullRep::new(a, b, d, LiftRule::Slack { groups: (0..d).map(|i| vec![i]).collect() })
        }
        DecisionSet::PathDag(g) => {
            let d = g.dim();
            let mut touched = vec![false; g.nodes()];
            for &(u, v) in g.edges() {
                touched[u] = true;
                touched[v] = true;
            }
            let internal: Vec<usize> = (0..g.nodes())
                .filter(|&v| v != g.source() && v != g.sink() && touched[v])
                .collect();
            let rows = internal.len() + 1;
            let mut a = DMatrix::zeros(rows, d);
            for (e, &(u, v)) in g.edges().iter().enumerate() {
                if let Some(r) = internal.iter().position(|&n| n == v) {
                    a[(r, e)] += 1.0;
                }
                if let Some(r) = internal.iter().position(|&n| n == u) {
                    a[(r, e)] -= 1.0;
                }
                if u == g.source() {
                    a[(rows - 1, e)] += 1.0;
                }
                if v == g.source() {
                    a[(rows - 1, e)] -= 1.0;
                }
            }
            let mut b = DVector::zeros(rows);
            b[rows - 1] = 1.0;
            HullRep::new(a, b, d, LiftRule::Identity)
        }
        DecisionSet::Matching(g) => {
            let d = g.dim();
            let groups = g.incidence();
            let n = groups.len();
            let cols = if g.perfect() { d } else { d + n };
            let mut a = DMatrix::zeros(n, cols);
            for (v, group) in groups.iter().enumerate() {
                for &e in group {
                    a[(v, e)] = 1.0;
                }
                if !g.perfect() {
                    a[(v, d + v)] = 1.0;
                }
            }
            let b = DVector::from_element(n, 1.0);
            let rule = if g.perfect() { LiftRule::Identity } else { LiftRule::Slack { groups } };
            HullRep::new(a, b, d, rule)
        }
        DecisionSet::Explicit(s) => {
            if s.decisions().is_empty() {
                return Err(GlError::EmptySet);
            }
            if s.decisions().len() > cap {
                return Err(GlError::TooLarge { cap });
            }
            if let Some(h) = explicit_affine_hull(set)? {
                return Ok(h);
            }
            let d = s.dim();
            let vertices = s.decisions().to_vec();
            let k = vertices.len();
            let mut a = DMatrix::zeros(d + 1, d + k);
            for i in 0..d {
                a[(i, i)] = 1.0;
                for (j, v) in vertices.iter().enumerate() {
                    if v.get(i) {
                        a[(i, d + j)] = -1.0;
                    }
                }
            }
            for j in 0..k {
                a[(d, d + j)] = 1.0;
            }
            let mut b = DVector::zeros(d + 1);
            b[d] = 1.0;
            HullRep::new(a, b, d, LiftRule::Barycentric { vertices })
        }
    }
}

/// Hull used by the reduction: identical to [`hull`] except that m-sets with
/// `m ≤ 1` drop their implied upper-bound slack rows.
pub fn hull_for_reduction(set: &DecisionSet, cap: usize) -> Result<HullRep> {
    match set {
        DecisionSet::MSet(s) if s.m() <= 1 => {
            let d = s.dim();
            let a = DMatrix::from_element(1, d, 1.0);
            let b = DVector::from_element(1, s.m() as f64);
            HullRep::new(a, b, d, LiftRule::Identity)
        }
        _ => hull(set, cap),
    }
}

/// `{w : Ew = f, w ≥ 0}` for the affine hull `Ew = f` of an explicit set, if
/// that polytope is bounded and its vertices are exactly the listed points.
fn explicit_affine_hull(set: &DecisionSet) -> Result<Option<HullRep>> {
    let DecisionSet::Explicit(s) = set else { return Ok(None) };
    let pts = s.decisions();
    let d = s.dim();
    // Equal cardinalities put 1ᵀw = const in the affine hull, which bounds it.
    if pts.iter().any(|x| x.count() != pts[0].count()) {
        return Ok(None);
    }
    let p0 = DVector::from_vec(pts[0].as_f64());
    let diffs = DMatrix::from_fn(pts.len().max(2) - 1, d, |k, i| {
        pts.get(k + 1).map_or(0.0, |x| f64::from(x.bits()[i]) - p0[i])
    });
    let normals = linalg::null_space(&diffs, 1e-10).transpose();
    if normals.nrows() == 0 {
        return Ok(None);
    }
    let rhs = &normals * &p0;
    let mut aug = DMatrix::zeros(normals.nrows(), d + 1);
    aug.view_mut((0, 0), (normals.nrows(), d)).copy_from(&normals);
    aug.set_column(d, &rhs);
    let (red, _) = linalg::rref(&aug, 1e-10);
    let a = red.columns(0, d).into_owned();
    let b = red.column(d).into_owned();
    let vertices = match linalg::basic_feasible_solutions(&a, &b, 1e-9, EXPLICIT_VERTEX_BASES) {
        Ok(v) => v,
        Err(GlError::TooLarge { .. }) => return Ok(None),
        Err(e) => return Err(e),
    };
    let exact = vertices.iter().all(|v| {
        v.iter().all(|c| (c - c.round()).abs() <= 1e-7)
            && Decision::new(v.iter().map(|c| c.round() as u8).collect()).is_ok_and(|x| s.contains(&x))
    });
    if !exact {
        return Ok(None);
    }
    HullRep::new(a, b, d, LiftRule::Identity).map(Some)
}
