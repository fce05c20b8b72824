use serde::Serialize;

use crate::error::{Error, Result};

/// Per-BS transmit powers in linear units.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct PowerVector(Vec<f64>);

impl PowerVector {
    pub fn new(powers: Vec<f64>) -> Result<Self> {
        if powers.is_empty() {
            return Err(Error::domain("PowerVector::new", "need at least one BS"));
        }
        if powers.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::domain("PowerVector::new", "powers must be finite and >= 0"));
        }
        Ok(PowerVector(powers))
    }

    /// Every BS at `budget / cells`.
    pub fn equal(cells: usize, budget: f64) -> Self {
        PowerVector(vec![budget / cells as f64; cells])
    }

    pub(crate) fn from_unchecked(powers: Vec<f64>) -> Self {
        PowerVector(powers.into_iter().map(|p| p.max(0.0)).collect())
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.0.iter().sum()
    }

    pub fn within_budget(&self, budget: f64) -> bool {
        self.total() <= budget * (1.0 + 1e-12)
    }

    pub fn scaled(&self, c: f64) -> PowerVector {
        PowerVector(self.0.iter().map(|p| p * c).collect())
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

impl std::ops::Index<usize> for PowerVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}
