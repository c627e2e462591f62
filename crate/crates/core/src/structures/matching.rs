use crate::error::{GlError, Result};

use super::{Decision, Fixing};

/// Matchings of a bipartite graph; coordinates are edges `(left, right)`.
/// With `perfect` set, only matchings saturating every vertex are decisions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BipartiteMatching {
    left: usize,
    right: usize,
    edges: Vec<(usize, usize)>,
    perfect: bool,
}

impl BipartiteMatching {
    pub fn new(left: usize, right: usize, edges: Vec<(usize, usize)>, perfect: bool) -> Result<Self> {
        for (e, &(l, r)) in edges.iter().enumerate() {
            if l >= left || r >= right {
                return Err(GlError::InvalidStructure(format!("edge {e} has an endpoint out of range")));
            }
            if edges[..e].contains(&(l, r)) {
                return Err(GlError::InvalidStructure(format!("edge {e} is a duplicate")));
            }
        }
        if perfect && left != right {
            return Err(GlError::InvalidStructure("perfect matchings need equal sides".into()));
        }
        Ok(Self { left, right, edges, perfect })
    }

    pub fn dim(&self) -> usize {
        self.edges.len()
    }

    pub fn left(&self) -> usize {
        self.left
    }

    pub fn right(&self) -> usize {
        self.right
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn perfect(&self) -> bool {
        self.perfect
    }

    /// Edge indices incident to each vertex, left vertices first.
    pub fn incidence(&self) -> Vec<Vec<usize>> {
        let mut groups = vec![Vec::new(); self.left + self.right];
        for (e, &(l, r)) in self.edges.iter().enumerate() {
            groups[l].push(e);
            groups[self.left + r].push(e);
        }
        groups
    }

    pub fn contains(&self, x: &Decision) -> bool {
        let mut deg = vec![0usize; self.left + self.right];
        for e in x.support() {
            let (l, r) = self.edges[e];
            deg[l] += 1;
            deg[self.left + r] += 1;
        }
        if self.perfect {
            deg.iter().all(|&k| k == 1)
        } else {
            deg.iter().all(|&k| k <= 1)
        }
    }

    pub fn enumerate(&self, cap: usize) -> Result<Vec<Decision>> {
        let mut out = Vec::new();
        let mut bits = vec![0u8; self.dim()];
        let mut used = vec![false; self.left + self.right];
        let mut expansions = 0usize;
        let budget = cap.saturating_mul(self.dim() + 1);
        self.extend(0, &mut bits, &mut used, &mut out, cap, &mut expansions, budget)?;
        Ok(out)
    }

    #[allow(clippy::too_many_arguments)]
    fn extend(
        &self,
        pos: usize,
        bits: &mut [u8],
        used: &mut [bool],
        out: &mut Vec<Decision>,
        cap: usize,
        expansions: &mut usize,
        budget: usize,
    ) -> Result<()> {
        *expansions += 1;
        if *expansions > budget {
            return Err(GlError::TooLarge { cap });
        }
        if pos == self.dim() {
            if self.perfect && !used.iter().all(|&u| u) {
                return Ok(());
            }
            if out.len() == cap {
                return Err(GlError::TooLarge { cap });
            }
            out.push(Decision(bits.to_vec()));
            return Ok(());
        }
        self.extend(pos + 1, bits, used, out, cap, expansions, budget)?;
        let (l, r) = self.edges[pos];
        let (lv, rv) = (l, self.left + r);
        if !used[lv] && !used[rv] {
            used[lv] = true;
            used[rv] = true;
            bits[pos] = 1;
            self.extend(pos + 1, bits, used, out, cap, expansions, budget)?;
            bits[pos] = 0;
            used[lv] = false;
            used[rv] = false;
        }
        Ok(())
    }

    /// Maximum-weight matching (perfect when required) consistent with the
    /// fixings, by successive shortest augmenting paths.
    pub(crate) fn best_value(&self, a: &[f64], fixings: &[Fixing]) -> Option<f64> {
        let n = self.left + self.right;
        let mut taken = vec![false; n];
        let mut base = 0.0;
        for (e, f) in fixings.iter().enumerate() {
            if *f == Some(true) {
                let (l, r) = self.edges[e];
                let (lv, rv) = (l, self.left + r);
                if taken[lv] || taken[rv] {
                    return None;
                }
                taken[lv] = true;
                taken[rv] = true;
                base += a[e];
            }
        }
        let free_edges: Vec<usize> = (0..self.dim())
            .filter(|&e| {
                let (l, r) = self.edges[e];
                fixings[e].is_none() && !taken[l] && !taken[self.left + r]
            })
            .collect();
        let remaining_left = (0..self.left).filter(|&l| !taken[l]).count();

        let mut mate_left: Vec<Option<usize>> = vec![None; self.left];
        let mut mate_right: Vec<Option<usize>> = vec![None; self.right];
        let mut value = 0.0;
        let mut size = 0;
        loop {
            let Some((gain, path)) = self.best_augmenting_path(a, &free_edges, &taken, &mate_left, &mate_right) else {
                break;
            };
            if !self.perfect && gain <= 0.0 {
                break;
            }
            let mut matched = vec![false; self.dim()];
            for e in mate_left.iter().flatten() {
                matched[*e] = true;
            }
            for e in path {
                matched[e] = !matched[e];
            }
            mate_left.iter_mut().for_each(|m| *m = None);
            mate_right.iter_mut().for_each(|m| *m = None);
            for e in (0..self.dim()).filter(|&e| matched[e]) {
                let (l, r) = self.edges[e];
                mate_left[l] = Some(e);
                mate_right[r] = Some(e);
            }
            value += gain;
            size += 1;
        }
        if self.perfect && size < remaining_left {
            return None;
        }
        Some(base + value)
    }

    /// Bellman-Ford over the residual graph: maximum-gain path from a free
    /// left vertex to a free right vertex alternating unmatched/matched edges.
    fn best_augmenting_path(
        &self,
        a: &[f64],
        free_edges: &[usize],
        taken: &[bool],
        mate_left: &[Option<usize>],
        mate_right: &[Option<usize>],
    ) -> Option<(f64, Vec<usize>)> {
        // Nodes: left vertices 0..L, right vertices L..L+R.
        let n = self.left + self.right;
        let mut dist = vec![f64::NEG_INFINITY; n];
        let mut pred: Vec<Option<usize>> = vec![None; n];
        for l in 0..self.left {
            if !taken[l] && mate_left[l].is_none() {
                dist[l] = 0.0;
            }
        }
        for _ in 0..n {
            let mut changed = false;
            for &e in free_edges {
                let (l, r) = self.edges[e];
                let rv = self.left + r;
                if mate_left[l] == Some(e) {
                    // matched edge, traversed right → left with gain −a
                    if dist[rv] > f64::NEG_INFINITY && dist[rv] - a[e] > dist[l] + 1e-15 {
                        dist[l] = dist[rv] - a[e];
                        pred[l] = Some(e);
                        changed = true;
                    }
                } else if dist[l] > f64::NEG_INFINITY && dist[l] + a[e] > dist[rv] + 1e-15 {
                    dist[rv] = dist[l] + a[e];
                    pred[rv] = Some(e);
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        let end = (0..self.right)
            .filter(|&r| mate_right[r].is_none() && !taken[self.left + r])
            .map(|r| self.left + r)
            .filter(|&v| dist[v] > f64::NEG_INFINITY)
            .max_by(|&u, &v| dist[u].total_cmp(&dist[v]).then(v.cmp(&u)))?;
        let mut path = Vec::new();
        let mut v = end;
        while let Some(e) = pred[v] {
            path.push(e);
            let (l, r) = self.edges[e];
            v = if v == self.left + r { l } else { self.left + r };
            if path.len() > n {
                return None;
            }
        }
        Some((dist[end], path))
    }

    pub(crate) fn without_edges(&self, drop: &[usize]) -> Result<Self> {
        let edges = self
            .edges
            .iter()
            .enumerate()
            .filter(|(e, _)| !drop.contains(e))
            .map(|(_, &edge)| edge)
            .collect();
        Self::new(self.left, self.right, edges, self.perfect)
    }
}
