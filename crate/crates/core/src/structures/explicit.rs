use crate::error::{GlError, Result};

use super::Decision;

/// An explicitly listed decision set, stored sorted and deduplicated.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExplicitSet {
    d: usize,
    decisions: Vec<Decision>,
}

impl ExplicitSet {
    pub fn new(rows: Vec<Vec<u8>>) -> Result<Self> {
        let d = rows.first().map_or(0, Vec::len);
        let mut decisions = Vec::with_capacity(rows.len());
        for row in rows {
            if row.len() != d {
                return Err(GlError::DimensionMismatch { expected: d, actual: row.len() });
            }
            decisions.push(Decision::new(row)?);
        }
        decisions.sort();
        decisions.dedup();
        Ok(Self { d, decisions })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn decisions(&self) -> &[Decision] {
        &self.decisions
    }

    pub fn contains(&self, x: &Decision) -> bool {
        self.decisions.binary_search(x).is_ok()
    }
}
