use crate::error::{GlError, Result};

use super::{suffix_max, Decision, Fixing};

/// All binary vectors of length `d` with exactly `m` ones.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MSet {
    d: usize,
    m: usize,
}

impl MSet {
    pub fn new(d: usize, m: usize) -> Result<Self> {
        if m > d {
            return Err(GlError::InvalidStructure(format!("m-set with m = {m} > d = {d}")));
        }
        Ok(Self { d, m })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn contains(&self, x: &Decision) -> bool {
        x.count() == self.m
    }

    pub fn enumerate(&self, cap: usize) -> Result<Vec<Decision>> {
        let mut out = Vec::new();
        let mut bits = vec![0u8; self.d];
        self.extend(0, 0, &mut bits, &mut out, cap)?;
        Ok(out)
    }

    fn extend(&self, pos: usize, ones: usize, bits: &mut [u8], out: &mut Vec<Decision>, cap: usize) -> Result<()> {
        if pos == self.d {
            if out.len() == cap {
                return Err(GlError::TooLarge { cap });
            }
            out.push(Decision(bits.to_vec()));
            return Ok(());
        }
        let left = self.d - pos - 1;
        if self.m - ones <= left {
            bits[pos] = 0;
            self.extend(pos + 1, ones, bits, out, cap)?;
        }
        if ones < self.m {
            bits[pos] = 1;
            self.extend(pos + 1, ones + 1, bits, out, cap)?;
            bits[pos] = 0;
        }
        Ok(())
    }

    /// Forced ones plus the largest free entries.
    pub(crate) fn best_value(&self, a: &[f64], fixings: &[Fixing]) -> Option<f64> {
        let mut total = 0.0;
        let mut forced = 0;
        let mut free = Vec::with_capacity(self.d);
        for (i, f) in fixings.iter().enumerate() {
            match f {
                Some(true) => {
                    forced += 1;
                    total += a[i];
                }
                Some(false) => {}
                None => free.push(a[i]),
            }
        }
        if forced > self.m || forced + free.len() < self.m {
            return None;
        }
        free.sort_by(|x, y| y.total_cmp(x));
        Some(total + free[..self.m - forced].iter().sum::<f64>())
    }

    /// Cardinality-and-budget dynamic program; budget states saturate at
    /// `max_budget`.
    pub(crate) fn budget_profile(&self, a: &[f64], u: &[u64], max_budget: u64, fixings: &[Fixing]) -> Vec<Option<f64>> {
        let levels = max_budget as usize + 1;
        let idx = |c: usize, b: usize| c * levels + b;
        let mut dp: Vec<Option<f64>> = vec![None; (self.m + 1) * levels];
        dp[idx(0, 0)] = Some(0.0);
        for i in 0..self.d {
            let mut next = if fixings[i] == Some(true) { vec![None; dp.len()] } else { dp.clone() };
            if fixings[i] != Some(false) {
                let step = u[i].min(max_budget) as usize;
                for c in 0..self.m {
                    for b in 0..levels {
                        if let Some(v) = dp[idx(c, b)] {
                            let nb = (b + step).min(levels - 1);
                            let cand = v + a[i];
                            let slot = &mut next[idx(c + 1, nb)];
                            if slot.map_or(true, |cur| cand > cur) {
                                *slot = Some(cand);
                            }
                        }
                    }
                }
            }
            dp = next;
        }
        let mut profile = dp[idx(self.m, 0)..idx(self.m, 0) + levels].to_vec();
        suffix_max(&mut profile);
        profile
    }
}
