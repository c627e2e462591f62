use crate::error::{GlError, Result};

use super::{suffix_max, Decision, Fixing};

/// Source-to-sink paths in a directed acyclic graph; coordinates are edges.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PathDag {
    nodes: usize,
    edges: Vec<(usize, usize)>,
    source: usize,
    sink: usize,
    topo: Vec<usize>,
    out_edges: Vec<Vec<usize>>,
}

/// Longest-path label: (number of forced edges used, weight). Ordered
/// lexicographically so that paths through every forced edge dominate.
type Label = (usize, f64);

fn better(cand: Label, cur: Option<Label>) -> bool {
    match cur {
        None => true,
        Some((c, v)) => cand.0 > c || (cand.0 == c && cand.1 > v),
    }
}

impl PathDag {
    pub fn new(nodes: usize, edges: Vec<(usize, usize)>, source: usize, sink: usize) -> Result<Self> {
        if source >= nodes || sink >= nodes {
            return Err(GlError::InvalidStructure("source or sink out of range".into()));
        }
        if source == sink {
            return Err(GlError::InvalidStructure("source and sink must differ".into()));
        }
        let mut out_edges = vec![Vec::new(); nodes];
        let mut indeg = vec![0usize; nodes];
        for (e, &(from, to)) in edges.iter().enumerate() {
            if from >= nodes || to >= nodes {
                return Err(GlError::InvalidStructure(format!("edge {e} has an endpoint out of range")));
            }
            if from == to {
                return Err(GlError::InvalidStructure(format!("edge {e} is a self-loop")));
            }
            out_edges[from].push(e);
            indeg[to] += 1;
        }
        // Kahn's algorithm; any leftover node sits on a directed cycle.
        let mut queue: Vec<usize> = (0..nodes).filter(|&v| indeg[v] == 0).collect();
        let mut topo = Vec::with_capacity(nodes);
        while let Some(v) = queue.pop() {
            topo.push(v);
            for &e in &out_edges[v] {
                let w = edges[e].1;
                indeg[w] -= 1;
                if indeg[w] == 0 {
                    queue.push(w);
                }
            }
        }
        if topo.len() != nodes {
            return Err(GlError::InvalidStructure("graph has a directed cycle".into()));
        }
        Ok(Self { nodes, edges, source, sink, topo, out_edges })
    }

    pub fn dim(&self) -> usize {
        self.edges.len()
    }

    pub fn nodes(&self) -> usize {
        self.nodes
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn source(&self) -> usize {
        self.source
    }

    pub fn sink(&self) -> usize {
        self.sink
    }

    pub fn contains(&self, x: &Decision) -> bool {
        let mut at = self.source;
        let mut used = 0;
        while at != self.sink {
            let next: Vec<usize> = self.out_edges[at].iter().copied().filter(|&e| x.get(e)).collect();
            if next.len() != 1 {
                return false;
            }
            at = self.edges[next[0]].1;
            used += 1;
        }
        used == x.count()
    }

    pub fn enumerate(&self, cap: usize) -> Result<Vec<Decision>> {
        let mut out = Vec::new();
        let mut path = Vec::new();
        let mut expansions = 0usize;
        let budget = cap.saturating_mul(self.dim() + 1);
        self.walk(self.source, &mut path, &mut out, cap, &mut expansions, budget)?;
        out.sort();
        Ok(out)
    }

    fn walk(
        &self,
        at: usize,
        path: &mut Vec<usize>,
        out: &mut Vec<Decision>,
        cap: usize,
        expansions: &mut usize,
        budget: usize,
    ) -> Result<()> {
        *expansions += 1;
        if *expansions > budget {
            return Err(GlError::TooLarge { cap });
        }
        if at == self.sink {
            if out.len() == cap {
                return Err(GlError::TooLarge { cap });
            }
            out.push(Decision::from_support(self.dim(), path));
            return Ok(());
        }
        for &e in &self.out_edges[at] {
            path.push(e);
            self.walk(self.edges[e].1, path, out, cap, expansions, budget)?;
            path.pop();
        }
        Ok(())
    }

    fn forced_count(fixings: &[Fixing]) -> usize {
        fixings.iter().filter(|f| **f == Some(true)).count()
    }

    pub(crate) fn best_value(&self, a: &[f64], fixings: &[Fixing]) -> Option<f64> {
        let mut label: Vec<Option<Label>> = vec![None; self.nodes];
        label[self.source] = Some((0, 0.0));
        for &v in &self.topo {
            // Paths stop at the sink.
            if v == self.sink {
                continue;
            }
            let Some((c, val)) = label[v] else { continue };
            for &e in &self.out_edges[v] {
                if fixings[e] == Some(false) {
                    continue;
                }
                let w = self.edges[e].1;
                let cand = (c + usize::from(fixings[e] == Some(true)), val + a[e]);
                if better(cand, label[w]) {
                    label[w] = Some(cand);
                }
            }
        }
        match label[self.sink] {
            Some((c, v)) if c == Self::forced_count(fixings) => Some(v),
            _ => None,
        }
    }

    /// Per-node, per-budget dynamic program; budget states saturate at
    /// `max_budget`.
    pub(crate) fn budget_profile(&self, a: &[f64], u: &[u64], max_budget: u64, fixings: &[Fixing]) -> Vec<Option<f64>> {
        let levels = max_budget as usize + 1;
        let mut label: Vec<Option<Label>> = vec![None; self.nodes * levels];
        label[self.source * levels] = Some((0, 0.0));
        for &v in &self.topo {
            if v == self.sink {
                continue;
            }
            for b in 0..levels {
                let Some((c, val)) = label[v * levels + b] else { continue };
                for &e in &self.out_edges[v] {
                    if fixings[e] == Some(false) {
                        continue;
                    }
                    let w = self.edges[e].1;
                    let nb = (b + u[e].min(max_budget) as usize).min(levels - 1);
                    let cand = (c + usize::from(fixings[e] == Some(true)), val + a[e]);
                    let slot = &mut label[w * levels + nb];
                    if better(cand, *slot) {
                        *slot = Some(cand);
                    }
                }
            }
        }
        let forced = Self::forced_count(fixings);
        let mut profile: Vec<Option<f64>> = label[self.sink * levels..(self.sink + 1) * levels]
            .iter()
            .map(|l| match l {
                Some((c, v)) if *c == forced => Some(*v),
                _ => None,
            })
            .collect();
        suffix_max(&mut profile);
        profile
    }

    /// Copy without the given edges (which must lie on no source-sink path).
    pub(crate) fn without_edges(&self, drop: &[usize]) -> Result<Self> {
        let edges = self
            .edges
            .iter()
            .enumerate()
            .filter(|(e, _)| !drop.contains(e))
            .map(|(_, &edge)| edge)
            .collect();
        Self::new(self.nodes, edges, self.source, self.sink)
    }
}
