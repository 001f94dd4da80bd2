use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Entrywise modulus tolerance accepted when a phase table is constructed.
pub const UNIMODULAR_TOL: f64 = 1e-14;

/// A unitary that is diagonal in an occupation-number (or tensor) basis,
/// stored as its table of phases.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagonalUnitary {
    phases: Vec<Complex64>,
    label: String,
}

impl DiagonalUnitary {
    pub fn new(phases: Vec<Complex64>, label: impl Into<String>) -> Result<Self> {
        if let Some((index, z)) = phases
            .iter()
            .enumerate()
            .find(|(_, z)| (z.norm() - 1.0).abs() > UNIMODULAR_TOL)
        {
            return Err(Error::NotUnimodular {
                index,
                modulus: z.norm(),
            });
        }
        Ok(Self {
            phases,
            label: label.into(),
        })
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            phases: vec![Complex64::new(1.0, 0.0); dim],
            label: "identity".into(),
        }
    }

    pub fn dim(&self) -> usize {
        self.phases.len()
    }

    pub fn phases(&self) -> &[Complex64] {
        &self.phases
    }

    pub fn phase(&self, i: usize) -> Complex64 {
        self.phases[i]
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn inverse(&self) -> Self {
        Self {
            phases: self.phases.iter().map(|z| z.conj()).collect(),
            label: format!("({})^-1", self.label),
        }
    }

    /// Entrywise product `self · other`.
    pub fn compose(&self, other: &Self) -> Result<Self> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: other.dim(),
            });
        }
        Ok(Self {
            phases: self
                .phases
                .iter()
                .zip(&other.phases)
                .map(|(a, b)| a * b)
                .collect(),
            label: format!("{} * {}", self.label, other.label),
        })
    }

    pub fn apply(&self, v: &[Complex64]) -> Result<Vec<Complex64>> {
        if v.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: v.len(),
            });
        }
        Ok(self.phases.iter().zip(v).map(|(z, x)| z * x).collect())
    }

    pub fn max_modulus_defect(&self) -> f64 {
        self.phases
            .iter()
            .map(|z| (z.norm() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// Largest entrywise distance `max_i |self_i - other_i|`.
    pub fn max_distance(&self, other: &Self) -> f64 {
        assert_eq!(self.dim(), other.dim(), "phase tables of different size");
        self.phases
            .iter()
            .zip(&other.phases)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn max_distance_from_identity(&self) -> f64 {
        self.phases
            .iter()
            .map(|z| (z - 1.0).norm())
            .fold(0.0, f64::max)
    }

    /// Largest entry of `|D E - E D|` for another diagonal operator `E`.
    pub fn commutator_with(&self, other: &[Complex64]) -> f64 {
        self.phases
            .iter()
            .zip(other)
            .map(|(a, b)| (a * b - b * a).norm())
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_unimodular_entries() {
        let err = DiagonalUnitary::new(vec![Complex64::new(1.0, 0.0), Complex64::new(0.5, 0.0)], "bad");
        assert!(matches!(err, Err(Error::NotUnimodular { index: 1, .. })));
    }

    #[test]
    fn inverse_is_conjugate() {
        let d = DiagonalUnitary::new(
            vec![Complex64::new(0.0, 1.0), Complex64::new(0.6, 0.8)],
            "d",
        )
        .unwrap();
        let id = d.compose(&d.inverse()).unwrap();
        assert!(id.max_distance_from_identity() < 1e-15);
    }
}
