//! Exact statevector simulation of the patch embedding circuit and its
//! fidelity kernel.

mod circuit;
mod state;

pub use circuit::{embed_pair, embed_patch, Axis, CircuitSpec, EmbeddingConfig, Gate, MAX_DEPTH};
pub use state::StateVector;

use crate::error::{Error, Result};

/// Statistics per patch, and therefore qubits per patch block.
pub const STATS_PER_PATCH: usize = 4;

/// Embedded states of one feature vector: a single 4-qubit state for a
/// one-patch vector, otherwise one 8-qubit state per consecutive patch pair.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    blocks: Vec<StateVector>,
}

impl Embedding {
    pub fn blocks(&self) -> &[StateVector] {
        &self.blocks
    }

    /// Mean per-block fidelity.
    pub fn fidelity(&self, other: &Embedding) -> Result<f64> {
        if self.blocks.len() != other.blocks.len() {
            return Err(Error::DimensionMismatch {
                what: "embedding blocks",
                expected: self.blocks.len(),
                got: other.blocks.len(),
            });
        }
        let total: f64 = self
            .blocks
            .iter()
            .zip(&other.blocks)
            .map(|(a, b)| a.fidelity(b))
            .sum();
        Ok(total / self.blocks.len() as f64)
    }
}

/// Pre-built circuits for a given embedding configuration.
#[derive(Debug, Clone)]
pub struct FeatureMap {
    config: EmbeddingConfig,
    single: CircuitSpec,
    pair: CircuitSpec,
}

impl FeatureMap {
    pub fn new(config: EmbeddingConfig) -> Result<Self> {
        Ok(Self {
            single: CircuitSpec::single_patch(config)?,
            pair: CircuitSpec::patch_pair(config)?,
            config,
        })
    }

    pub fn config(&self) -> EmbeddingConfig {
        self.config
    }

    /// Feature vectors of length 4 embed on 4 qubits; lengths that are a
    /// multiple of 8 embed as consecutive non-overlapping patch pairs.
    pub fn embed(&self, x: &[f64]) -> Result<Embedding> {
        let blocks = match x.len() {
            STATS_PER_PATCH => vec![self.single.prepare(x)?],
            n if n > 0 && n % (2 * STATS_PER_PATCH) == 0 => x
                .chunks_exact(2 * STATS_PER_PATCH)
                .map(|c| self.pair.prepare(c))
                .collect::<Result<_>>()?,
            n => {
                return Err(Error::invalid(
                    "feature length",
                    format!("{n} is neither 4 nor a multiple of 8 (patch pairs)"),
                ))
            }
        };
        Ok(Embedding { blocks })
    }

    pub fn kernel(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        if x.len() != y.len() {
            return Err(Error::DimensionMismatch {
                what: "feature vector lengths",
                expected: x.len(),
                got: y.len(),
            });
        }
        self.embed(x)?.fidelity(&self.embed(y)?)
    }
}

/// `|⟨φ(x)|φ(y)⟩|²`, averaged over patch pairs for longer vectors.
pub fn fidelity_kernel(x: &[f64], y: &[f64], config: EmbeddingConfig) -> Result<f64> {
    FeatureMap::new(config)?.kernel(x, y)
}

#[cfg(test)]
mod tests {
    use super::*;

    const CFG: EmbeddingConfig = EmbeddingConfig {
        depth: 1,
        s3_axis: Axis::Z,
    };

    #[test]
    fn zero_vectors_have_unit_kernel() {
        assert!((fidelity_kernel(&[0.0; 8], &[0.0; 8], CFG).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn self_kernel_is_one() {
        let x = [0.7, 1.9, 0.4, -0.3, 1.2, 0.1, 1.0, 0.8];
        assert!((fidelity_kernel(&x, &x, CFG).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn length_rules() {
        assert!(fidelity_kernel(&[0.0; 8], &[0.0; 4], CFG).is_err());
        assert!(fidelity_kernel(&[0.0; 12], &[0.0; 12], CFG).is_err());
        assert!(fidelity_kernel(&[0.0; 6], &[0.0; 6], CFG).is_err());
        assert!(fidelity_kernel(&[0.0; 4], &[0.0; 4], CFG).is_ok());
        assert!(fidelity_kernel(&[0.0; 16], &[0.0; 16], CFG).is_ok());
    }

    #[test]
    fn four_patch_kernel_averages_pairs() {
        let fm = FeatureMap::new(CFG).unwrap();
        let x: Vec<f64> = (0..16).map(|i| (i as f64 * 0.37).sin()).collect();
        let y: Vec<f64> = (0..16).map(|i| (i as f64 * 0.61).cos()).collect();
        let whole = fm.kernel(&x, &y).unwrap();
        let a = fm.kernel(&x[..8], &y[..8]).unwrap();
        let b = fm.kernel(&x[8..], &y[8..]).unwrap();
        assert!((whole - 0.5 * (a + b)).abs() < 1e-15);
    }
}
