//! Combinatorial decision sets and the optimization oracles over them.
//!
//! Every set `X ⊂ {0,1}^d` supports exact linear maximization, budgeted linear
//! maximization (`max aᵀx` subject to `uᵀx ≥ s`), deterministic enumeration in
//! lexicographic order and an exact lifted convex-hull description.
//!
//! Ties are always broken towards the lexicographically smallest binary
//! vector. All oracles reduce to a per-structure "best value under partial
//! fixings" routine; the argmax is then recovered coordinate by coordinate,
//! trying `x_j = 0` first.

mod explicit;
mod hull;
mod matching;
mod mset;
mod path_dag;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{GlError, Result};

pub use explicit::ExplicitSet;
pub use hull::{hull, hull_for_reduction, HullRep, LiftRule};
pub use matching::BipartiteMatching;
pub use mset::MSet;
pub use path_dag::PathDag;

/// Default enumeration guard: decisions (and partial expansions) per enumeration.
pub const DEFAULT_ENUM_CAP: usize = 1_000_000;

/// Fixing of a single coordinate: `None` is free, `Some(b)` forces `x_j = b`.
pub type Fixing = Option<bool>;

/// A binary decision vector.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Decision(Vec<u8>);

impl Decision {
    pub fn new(bits: Vec<u8>) -> Result<Self> {
        if let Some(bad) = bits.iter().find(|&&b| b > 1) {
            return Err(GlError::InvalidStructure(format!(
                "decision entries must be 0 or 1, found {bad}"
            )));
        }
        Ok(Self(bits))
    }

    pub fn zeros(d: usize) -> Self {
        Self(vec![0; d])
    }

    pub fn from_support(d: usize, support: &[usize]) -> Self {
        let mut bits = vec![0; d];
        for &i in support {
            bits[i] = 1;
        }
        Self(bits)
    }

    pub(crate) fn from_fixings(fixings: &[Fixing]) -> Self {
        Self(fixings.iter().map(|f| u8::from(*f == Some(true))).collect())
    }

    pub fn bits(&self) -> &[u8] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        self.0[i] == 1
    }

    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().enumerate().filter(|(_, &b)| b == 1).map(|(i, _)| i)
    }

    pub fn count(&self) -> usize {
        self.0.iter().filter(|&&b| b == 1).count()
    }

    /// `aᵀx`, summed in coordinate order.
    pub fn dot(&self, a: &[f64]) -> f64 {
        self.support().map(|i| a[i]).sum()
    }

    pub fn dot_int(&self, u: &[u64]) -> u64 {
        self.support().map(|i| u[i]).sum()
    }

    pub fn as_f64(&self) -> Vec<f64> {
        self.0.iter().map(|&b| f64::from(b)).collect()
    }
}

impl fmt::Display for Decision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in &self.0 {
            write!(f, "{b}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for Decision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Decision({self})")
    }
}

/// A supported combinatorial structure.
#[derive(Clone, Debug, PartialEq)]
pub enum DecisionSet {
    MSet(MSet),
    PathDag(PathDag),
    Matching(BipartiteMatching),
    Explicit(ExplicitSet),
}

impl DecisionSet {
    pub fn mset(d: usize, m: usize) -> Result<Self> {
        MSet::new(d, m).map(Self::MSet)
    }

    pub fn path_dag(nodes: usize, edges: Vec<(usize, usize)>, source: usize, sink: usize) -> Result<Self> {
        PathDag::new(nodes, edges, source, sink).map(Self::PathDag)
    }

    pub fn matching(left: usize, right: usize, edges: Vec<(usize, usize)>, perfect: bool) -> Result<Self> {
        BipartiteMatching::new(left, right, edges, perfect).map(Self::Matching)
    }

    pub fn explicit(decisions: Vec<Vec<u8>>) -> Result<Self> {
        ExplicitSet::new(decisions).map(Self::Explicit)
    }

    /// Ambient dimension `d`.
    pub fn dim(&self) -> usize {
        match self {
            Self::MSet(s) => s.dim(),
            Self::PathDag(s) => s.dim(),
            Self::Matching(s) => s.dim(),
            Self::Explicit(s) => s.dim(),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Self::MSet(_) => "mset",
            Self::PathDag(_) => "path_dag",
            Self::Matching(_) => "bipartite_matching",
            Self::Explicit(_) => "explicit",
        }
    }

    pub fn contains(&self, x: &Decision) -> bool {
        x.dim() == self.dim()
            && match self {
                Self::MSet(s) => s.contains(x),
                Self::PathDag(s) => s.contains(x),
                Self::Matching(s) => s.contains(x),
                Self::Explicit(s) => s.contains(x),
            }
    }

    /// All decisions in lexicographic order, or `TooLarge` once more than
    /// `cap` decisions (or `cap·(d+1)` partial expansions) are produced.
    pub fn enumerate(&self, cap: usize) -> Result<Vec<Decision>> {
        match self {
            Self::MSet(s) => s.enumerate(cap),
            Self::PathDag(s) => s.enumerate(cap),
            Self::Matching(s) => s.enumerate(cap),
            Self::Explicit(s) => Ok(s.decisions().to_vec()),
        }
    }

    /// Best `aᵀx` over decisions consistent with `fixings`; `None` if none is.
    pub(crate) fn best_value(&self, a: &[f64], fixings: &[Fixing]) -> Option<f64> {
        match self {
            Self::MSet(s) => s.best_value(a, fixings),
            Self::PathDag(s) => s.best_value(a, fixings),
            Self::Matching(s) => s.best_value(a, fixings),
            Self::Explicit(s) => enumerated_best(s.decisions(), a, None, fixings),
        }
    }

    /// For each `s` in `0..=max_budget`, the best `aᵀx` subject to
    /// `uᵀx ≥ s` and the fixings.
    pub(crate) fn budget_profile(
        &self,
        a: &[f64],
        u: &[u64],
        max_budget: u64,
        fixings: &[Fixing],
        cap: usize,
    ) -> Result<Vec<Option<f64>>> {
        match self {
            Self::MSet(s) => Ok(s.budget_profile(a, u, max_budget, fixings)),
            Self::PathDag(s) => Ok(s.budget_profile(a, u, max_budget, fixings)),
            Self::Matching(_) | Self::Explicit(_) => {
                let all = self.enumerate(cap).map_err(|_| GlError::OracleUnavailable(self.kind().into()))?;
                Ok(enumerated_profile(&all, a, u, max_budget, fixings))
            }
        }
    }

    /// Exact linear maximization `argmax_{x ∈ X} aᵀx`, lexicographically
    /// smallest among maximizers.
    pub fn linear_max(&self, a: &[f64]) -> Result<Decision> {
        self.check_len(a.len())?;
        if let Self::Explicit(s) = self {
            return lex_first_best(s.decisions(), a).ok_or(GlError::EmptySet);
        }
        lex_argmax(self.dim(), a, |fx| self.best_value(a, fx)).ok_or(GlError::EmptySet)
    }

    /// Exact budgeted linear maximization: `argmax aᵀx` subject to `uᵀx ≥ s`.
    ///
    /// Returns `Ok(None)` when no decision meets the budget. Exact by dynamic
    /// programming for m-sets and DAG paths, by enumeration (within `cap`)
    /// for matchings and explicit sets.
    pub fn budgeted_linear_max(&self, a: &[f64], u: &[u64], s: i64, cap: usize) -> Result<Option<Decision>> {
        self.check_len(a.len())?;
        self.check_len(u.len())?;
        if s <= 0 {
            return self.linear_max(a).map(Some).or_else(|e| match e {
                GlError::EmptySet => Ok(None),
                e => Err(e),
            });
        }
        let s = s as u64;
        match self {
            Self::Matching(_) | Self::Explicit(_) => {
                let all = self.enumerate(cap).map_err(|_| GlError::OracleUnavailable(self.kind().into()))?;
                Ok(lex_first_best_budgeted(&all, a, u, s))
            }
            _ => {
                let eval = |fx: &[Fixing]| -> Option<f64> {
                    self.budget_profile(a, u, s, fx, cap).ok().and_then(|p| p[s as usize])
                };
                Ok(lex_argmax(self.dim(), a, eval))
            }
        }
    }

    /// Decision with the fewest ones outside `allowed` (indices are 0-based).
    pub fn min_support_completion(&self, allowed: &[usize]) -> Result<Decision> {
        let mut a = vec![-1.0; self.dim()];
        for &i in allowed {
            a[i] = 0.0;
        }
        self.linear_max(&a)
    }

    /// Largest decision size `m`.
    pub fn max_size(&self) -> Result<usize> {
        Ok(self.linear_max(&vec![1.0; self.dim()])?.count())
    }

    /// Coordinates never set by any decision, plus one witness per covered
    /// coordinate.
    pub fn check_covering(&self) -> Result<Covering> {
        let d = self.dim();
        let mut uncovered = Vec::new();
        let mut witnesses = Vec::with_capacity(d);
        for i in 0..d {
            let mut a = vec![0.0; d];
            a[i] = 1.0;
            let x = self.linear_max(&a)?;
            if x.get(i) {
                witnesses.push(Some(x));
            } else {
                uncovered.push(i);
                witnesses.push(None);
            }
        }
        Ok(Covering { uncovered, witnesses })
    }

    /// The same structure with the given coordinates removed. Only valid for
    /// coordinates that no decision uses; returns the kept original indices.
    pub fn drop_uncovered(&self, uncovered: &[usize]) -> Result<(DecisionSet, Vec<usize>)> {
        let d = self.dim();
        let kept: Vec<usize> = (0..d).filter(|i| !uncovered.contains(i)).collect();
        if uncovered.is_empty() {
            return Ok((self.clone(), kept));
        }
        let reduced = match self {
            Self::MSet(_) => {
                return Err(GlError::InvalidStructure("an m-set with m ≥ 1 covers every item".into()))
            }
            Self::PathDag(s) => Self::PathDag(s.without_edges(uncovered)?),
            Self::Matching(s) => Self::Matching(s.without_edges(uncovered)?),
            Self::Explicit(s) => Self::explicit(
                s.decisions().iter().map(|x| kept.iter().map(|&i| x.bits()[i]).collect()).collect(),
            )?,
        };
        Ok((reduced, kept))
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.dim() {
            return Err(GlError::DimensionMismatch { expected: self.dim(), actual: len });
        }
        Ok(())
    }
}

/// Result of a covering check.
#[derive(Clone, Debug, PartialEq)]
pub struct Covering {
    pub uncovered: Vec<usize>,
    /// `witnesses[i]` is a decision with `x_i = 1`, when one exists.
    pub witnesses: Vec<Option<Decision>>,
}

/// A pluggable budgeted-linear-maximization oracle with approximation ratio
/// `ε ∈ (0, 1]`: it returns `x̃` with `aᵀx̃ ≥ ε·max{aᵀx : uᵀx ≥ s}` and
/// `uᵀx̃ ≥ s`.
pub trait BudgetedOracle {
    fn ratio(&self) -> f64;

    fn maximize(&self, set: &DecisionSet, a: &[f64], u: &[u64], s: i64) -> Result<Option<Decision>>;

    /// Values of the oracle's answers for every budget `0..=max_budget`.
    fn profile(&self, set: &DecisionSet, a: &[f64], u: &[u64], max_budget: u64) -> Result<Vec<Option<f64>>> {
        (0..=max_budget)
            .map(|s| Ok(self.maximize(set, a, u, s as i64)?.map(|x| x.dot(a))))
            .collect()
    }
}

/// The exact oracle (`ε = 1`) backed by [`DecisionSet::budgeted_linear_max`].
#[derive(Clone, Copy, Debug)]
pub struct ExactOracle {
    pub cap: usize,
}

impl Default for ExactOracle {
    fn default() -> Self {
        Self { cap: DEFAULT_ENUM_CAP }
    }
}

impl BudgetedOracle for ExactOracle {
    fn ratio(&self) -> f64 {
        1.0
    }

    fn maximize(&self, set: &DecisionSet, a: &[f64], u: &[u64], s: i64) -> Result<Option<Decision>> {
        set.budgeted_linear_max(a, u, s, self.cap)
    }

    fn profile(&self, set: &DecisionSet, a: &[f64], u: &[u64], max_budget: u64) -> Result<Vec<Option<f64>>> {
        set.budget_profile(a, u, max_budget, &vec![None; set.dim()], self.cap)
    }
}

fn value_tolerance(a: &[f64]) -> f64 {
    1e-12 * (1.0 + a.iter().map(|v| v.abs()).sum::<f64>())
}

/// Recovers the lexicographically smallest maximizer from a best-value
/// routine by fixing coordinates one at a time.
fn lex_argmax(d: usize, a: &[f64], mut best: impl FnMut(&[Fixing]) -> Option<f64>) -> Option<Decision> {
    let mut fixings = vec![None; d];
    let target = best(&fixings)?;
    let tol = value_tolerance(a);
    for j in 0..d {
        fixings[j] = Some(false);
        match best(&fixings) {
            Some(v) if v >= target - tol => {}
            _ => fixings[j] = Some(true),
        }
    }
    Some(Decision::from_fixings(&fixings))
}

fn consistent(x: &Decision, fixings: &[Fixing]) -> bool {
    fixings.iter().zip(x.bits()).all(|(f, &b)| f.map_or(true, |v| v == (b == 1)))
}

fn enumerated_best(all: &[Decision], a: &[f64], u: Option<(&[u64], u64)>, fixings: &[Fixing]) -> Option<f64> {
    all.iter()
        .filter(|x| consistent(x, fixings))
        .filter(|x| u.map_or(true, |(u, s)| x.dot_int(u) >= s))
        .map(|x| x.dot(a))
        .fold(None, |acc: Option<f64>, v| Some(acc.map_or(v, |b| b.max(v))))
}

pub(crate) fn enumerated_profile(all: &[Decision], a: &[f64], u: &[u64], max_budget: u64, fixings: &[Fixing]) -> Vec<Option<f64>> {
    let mut profile: Vec<Option<f64>> = vec![None; max_budget as usize + 1];
    for x in all.iter().filter(|x| consistent(x, fixings)) {
        let level = x.dot_int(u).min(max_budget) as usize;
        let v = x.dot(a);
        if profile[level].map_or(true, |b| v > b) {
            profile[level] = Some(v);
        }
    }
    suffix_max(&mut profile);
    profile
}

pub(crate) fn suffix_max(profile: &mut [Option<f64>]) {
    for s in (0..profile.len().saturating_sub(1)).rev() {
        profile[s] = match (profile[s], profile[s + 1]) {
            (Some(x), Some(y)) => Some(x.max(y)),
            (x, y) => x.or(y),
        };
    }
}

/// First decision (in the given lexicographic order) within tolerance of the
/// best value.
fn lex_first_best(sorted: &[Decision], a: &[f64]) -> Option<Decision> {
    let best = enumerated_best(sorted, a, None, &[])?;
    let tol = value_tolerance(a);
    sorted.iter().find(|x| x.dot(a) >= best - tol).cloned()
}

pub(crate) fn lex_first_best_budgeted(sorted: &[Decision], a: &[f64], u: &[u64], s: u64) -> Option<Decision> {
    let best = enumerated_best(sorted, a, Some((u, s)), &[])?;
    let tol = value_tolerance(a);
    sorted
        .iter()
        .find(|x| x.dot_int(u) >= s && x.dot(a) >= best - tol)
        .cloned()
}
