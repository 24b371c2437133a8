use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on `|Σ w - 1|`.
pub const SIMPLEX_TOLERANCE: f64 = 1e-9;

/// A point on the probability simplex: each entry in `[0, 1]`, summing to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct WeightVector(Vec<f64>);

impl WeightVector {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::Empty("weight vector"));
        }
        if let Some(w) = weights.iter().find(|w| !(0.0..=1.0).contains(*w)) {
            return Err(Error::InvalidWeights(format!("entry {w} outside [0, 1]")));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_TOLERANCE {
            return Err(Error::InvalidWeights(format!("entries sum to {sum}")));
        }
        Ok(Self(weights))
    }

    pub fn uniform(n: usize) -> Self {
        assert!(n > 0, "uniform weights need at least one entry");
        Self(vec![1.0 / n as f64; n])
    }

    /// The simplex vertex `e_j`.
    pub fn vertex(n: usize, j: usize) -> Self {
        assert!(j < n, "vertex index out of range");
        let mut w = vec![0.0; n];
        w[j] = 1.0;
        Self(w)
    }

    /// Clamps negatives to zero and rescales onto the simplex. Used on
    /// optimizer iterates that drifted by rounding.
    pub(crate) fn normalized(mut weights: Vec<f64>) -> Self {
        for w in weights.iter_mut() {
            *w = w.max(0.0);
        }
        let sum: f64 = weights.iter().sum();
        for w in weights.iter_mut() {
            *w = (*w / sum).min(1.0);
        }
        Self(weights)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn iter(&self) -> impl Iterator<Item = f64> + '_ {
        self.0.iter().copied()
    }
}

impl std::ops::Index<usize> for WeightVector {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl TryFrom<Vec<f64>> for WeightVector {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<WeightVector> for Vec<f64> {
    fn from(w: WeightVector) -> Self {
        w.0
    }
}
