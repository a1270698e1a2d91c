//! Per-link normalized throughput vectors.

use std::fmt;

/// Per-link normalized throughput (airtime fraction in `[0, 1]`).
#[derive(Debug, Clone, PartialEq)]
pub struct ThroughputVector {
    values: Vec<f64>,
}

impl ThroughputVector {
    pub fn new(values: Vec<f64>) -> Self {
        debug_assert!(values.iter().all(|v| (-1e-12..=1.0 + 1e-12).contains(v)));
        Self { values }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, link: usize) -> f64 {
        self.values[link]
    }

    /// Largest absolute componentwise difference.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.len(), other.len(), "vector length mismatch");
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.values
    }
}

impl fmt::Display for ThroughputVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, v) in self.values.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{v:.4}")?;
        }
        write!(f, ")")
    }
}

impl From<Vec<f64>> for ThroughputVector {
    fn from(values: Vec<f64>) -> Self {
        Self::new(values)
    }
}
