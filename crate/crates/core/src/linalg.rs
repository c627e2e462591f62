//! Dense linear-algebra helpers shared by the hull, projection and
//! decomposition code.

use nalgebra::{DMatrix, DVector};

use crate::error::{GlError, Result};

/// Orthonormal basis (as columns) of the null space of `m`. Singular values
/// below `rel_tol · σ_max` count as zero.
pub fn null_space(m: &DMatrix<f64>, rel_tol: f64) -> DMatrix<f64> {
    let n = m.ncols();
    if m.nrows() == 0 || m.iter().all(|v| *v == 0.0) {
        return DMatrix::identity(n, n);
    }
    // Pad to at least n rows so the SVD returns a full right basis.
    let padded = if m.nrows() < n {
        let mut p = DMatrix::zeros(n, n);
        p.view_mut((0, 0), (m.nrows(), n)).copy_from(m);
        p
    } else {
        m.clone()
    };
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.expect("right singular vectors requested");
    let smax = svd.singular_values.max();
    let cols: Vec<DVector<f64>> = svd
        .singular_values
        .iter()
        .enumerate()
        .filter(|(_, &s)| s <= rel_tol * smax)
        .map(|(k, _)| v_t.row(k).transpose())
        .collect();
    if cols.is_empty() {
        return DMatrix::zeros(n, 0);
    }
    DMatrix::from_columns(&cols)
}

/// Reduced row echelon form with partial pivoting; returns the nonzero rows
/// and the pivot columns.
pub fn rref(m: &DMatrix<f64>, tol: f64) -> (DMatrix<f64>, Vec<usize>) {
    let mut r = m.clone();
    let (rows, cols) = r.shape();
    let mut pivots = Vec::new();
    let mut row = 0;
    for col in 0..cols {
        if row == rows {
            break;
        }
        let (best, val) = (row..rows)
            .map(|i| (i, r[(i, col)].abs()))
            .max_by(|x, y| x.1.total_cmp(&y.1))
            .unwrap();
        if val <= tol {
            continue;
        }
        r.swap_rows(row, best);
        let p = r[(row, col)];
        for j in 0..cols {
            r[(row, j)] /= p;
        }
        for i in 0..rows {
            if i != row {
                let f = r[(i, col)];
                if f != 0.0 {
                    for j in 0..cols {
                        r[(i, j)] -= f * r[(row, j)];
                    }
                }
            }
        }
        pivots.push(col);
        row += 1;
    }
    for v in r.iter_mut() {
        if v.abs() <= tol {
            *v = 0.0;
        }
    }
    (r.rows(0, row).into_owned(), pivots)
}

/// All basic feasible solutions (vertices) of `{z : Az = b, z ≥ 0}`.
///
/// Enumerates column bases, so it is meant for desk-scale polytopes only;
/// fails with `TooLarge` when more than `max_bases` bases would be tried.
pub fn basic_feasible_solutions(a: &DMatrix<f64>, b: &DVector<f64>, tol: f64, max_bases: usize) -> Result<Vec<DVector<f64>>> {
    let n = a.ncols();
    let mut aug = DMatrix::zeros(a.nrows(), n + 1);
    aug.view_mut((0, 0), (a.nrows(), n)).copy_from(a);
    aug.set_column(n, b);
    let (red, pivots) = rref(&aug, 1e-10);
    if pivots.last() == Some(&n) {
        return Ok(Vec::new());
    }
    let r = pivots.len();
    let a_red = red.columns(0, n).into_owned();
    let b_red = red.column(n).into_owned();
    if r == 0 {
        return Ok(vec![DVector::zeros(n)]);
    }
    if binomial(n, r) > max_bases as f64 {
        return Err(GlError::TooLarge { cap: max_bases });
    }
    let mut out: Vec<DVector<f64>> = Vec::new();
    for basis in Combinations::new(n, r) {
        let bmat = DMatrix::from_fn(r, r, |i, j| a_red[(i, basis[j])]);
        let Some(lu) = Some(bmat.lu()).filter(|lu| lu.is_invertible()) else { continue };
        let Some(xb) = lu.solve(&b_red) else { continue };
        if xb.iter().any(|v| !v.is_finite() || *v < -tol) {
            continue;
        }
        // Reject near-singular bases whose solution does not satisfy Az = b.
        let mut z = DVector::zeros(n);
        for (k, &j) in basis.iter().enumerate() {
            z[j] = xb[k].max(0.0);
        }
        if (a * &z - b).amax() > 1e-7 * (1.0 + b.amax()) {
            continue;
        }
        if !out.iter().any(|v| (v - &z).amax() <= 1e-7) {
            out.push(z);
        }
    }
    Ok(out)
}

/// Lawson–Hanson non-negative least squares: `argmin ‖Ax − b‖` over `x ≥ 0`.
pub fn nnls(a: &DMatrix<f64>, b: &DVector<f64>, max_iter: usize) -> Result<DVector<f64>> {
    let n = a.ncols();
    let tol = 1e-12 * (1.0 + a.amax() * b.amax()) * n.max(1) as f64;
    let mut x = DVector::zeros(n);
    let mut passive = vec![false; n];
    let mut w = a.tr_mul(&(b - a * &x));
    let mut iter = 0;
    loop {
        let next = (0..n).filter(|&j| !passive[j] && w[j] > tol).max_by(|&i, &j| w[i].total_cmp(&w[j]));
        let Some(j) = next else { break };
        passive[j] = true;
        loop {
            iter += 1;
            if iter > max_iter {
                return Err(GlError::NumericFailure("nnls did not converge".into()));
            }
            let s = restricted_lstsq(a, b, &passive);
            if (0..n).filter(|&i| passive[i]).all(|i| s[i] > 0.0) {
                x = s;
                break;
            }
            let alpha = (0..n)
                .filter(|&i| passive[i] && s[i] <= 0.0)
                .map(|i| x[i] / (x[i] - s[i]))
                .fold(f64::INFINITY, f64::min);
            x += (&s - &x) * alpha;
            for i in 0..n {
                if passive[i] && x[i] <= 1e-15 {
                    passive[i] = false;
                    x[i] = 0.0;
                }
            }
        }
        w = a.tr_mul(&(b - a * &x));
    }
    Ok(x)
}

fn restricted_lstsq(a: &DMatrix<f64>, b: &DVector<f64>, passive: &[bool]) -> DVector<f64> {
    let idx: Vec<usize> = (0..a.ncols()).filter(|&j| passive[j]).collect();
    let sub = DMatrix::from_fn(a.nrows(), idx.len(), |i, k| a[(i, idx[k])]);
    let sol = sub.svd(true, true).solve(b, 1e-14).unwrap_or_else(|_| DVector::zeros(idx.len()));
    let mut out = DVector::zeros(a.ncols());
    for (k, &j) in idx.iter().enumerate() {
        out[j] = sol[k];
    }
    out
}

pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    (0..k.min(n - k)).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Lexicographic `k`-subsets of `0..n`.
pub struct Combinations {
    n: usize,
    idx: Vec<usize>,
    done: bool,
}

impl Combinations {
    pub fn new(n: usize, k: usize) -> Self {
        Self { n, idx: (0..k).collect(), done: k > n }
    }
}

impl Iterator for Combinations {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        if self.done {
            return None;
        }
        let out = self.idx.clone();
        let k = self.idx.len();
        let mut i = k;
        loop {
            if i == 0 {
                self.done = true;
                break;
            }
            i -= 1;
            if self.idx[i] < self.n - k + i {
                self.idx[i] += 1;
                for j in i + 1..k {
                    self.idx[j] = self.idx[j - 1] + 1;
                }
                break;
            }
        }
        Some(out)
    }
}
