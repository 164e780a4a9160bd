use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{StateVector, STATS_PER_PATCH};
use crate::error::{Error, Result};

/// Largest supported number of repeated layers.
pub const MAX_DEPTH: usize = 3;

/// Pauli rotation axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    /// Matrix of `exp(-iθσ/2)`.
    pub(crate) fn rotation(self, theta: f64) -> [[Complex64; 2]; 2] {
        let (s, c) = (theta / 2.0).sin_cos();
        let z = Complex64::new(0.0, 0.0);
        match self {
            Axis::X => [
                [Complex64::new(c, 0.0), Complex64::new(0.0, -s)],
                [Complex64::new(0.0, -s), Complex64::new(c, 0.0)],
            ],
            Axis::Y => [
                [Complex64::new(c, 0.0), Complex64::new(-s, 0.0)],
                [Complex64::new(s, 0.0), Complex64::new(c, 0.0)],
            ],
            Axis::Z => [[Complex64::new(c, -s), z], [z, Complex64::new(c, s)]],
        }
    }
}

impl std::str::FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "X" => Ok(Axis::X),
            "Y" => Ok(Axis::Y),
            "Z" => Ok(Axis::Z),
            _ => Err(Error::invalid("axis", format!("expected X, Y or Z, got {s:?}"))),
        }
    }
}

/// Circuit-level knobs of the embedding.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EmbeddingConfig {
    /// Number of times the rotation + entangler layer is applied (1..=3).
    pub depth: usize,
    /// Rotation axis used for the bandwidth statistic (third qubit of each
    /// patch block).
    pub s3_axis: Axis,
}

impl Default for EmbeddingConfig {
    fn default() -> Self {
        Self {
            depth: 1,
            s3_axis: Axis::Z,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Gate {
    /// Rotation by the angle at `angle` in the input vector.
    Rotation { axis: Axis, qubit: usize, angle: usize },
    Cz(usize, usize),
}

/// A validated gate sequence over `n_qubits` with its layer repeated `depth`
/// times.
#[derive(Debug, Clone, PartialEq)]
pub struct CircuitSpec {
    n_qubits: usize,
    depth: usize,
    n_angles: usize,
    layer: Vec<Gate>,
}

impl CircuitSpec {
    /// Only nearest-neighbour CZ pairs are accepted.
    pub fn new(n_qubits: usize, depth: usize, layer: Vec<Gate>) -> Result<Self> {
        if !(1..=MAX_DEPTH).contains(&depth) {
            return Err(Error::invalid("depth", format!("{depth} outside 1..={MAX_DEPTH}")));
        }
        let mut n_angles = 0;
        for g in &layer {
            match *g {
                Gate::Rotation { qubit, angle, .. } => {
                    if qubit >= n_qubits {
                        return Err(Error::QubitOutOfRange { qubit, n_qubits });
                    }
                    n_angles = n_angles.max(angle + 1);
                }
                Gate::Cz(a, b) => {
                    if a == b {
                        return Err(Error::SameQubit(a));
                    }
                    if a.max(b) >= n_qubits {
                        return Err(Error::QubitOutOfRange {
                            qubit: a.max(b),
                            n_qubits,
                        });
                    }
                    if a.abs_diff(b) != 1 {
                        return Err(Error::invalid(
                            "cz",
                            format!("({a}, {b}) is not a nearest-neighbour pair"),
                        ));
                    }
                }
            }
        }
        Ok(Self {
            n_qubits,
            depth,
            n_angles,
            layer,
        })
    }

    /// One patch on qubits 0..4: RX(s1) RY(s2) R?(s3) RY(s4), then CZ(0,1),
    /// CZ(1,2), CZ(2,3).
    pub fn single_patch(cfg: EmbeddingConfig) -> Result<Self> {
        let mut layer = block_rotations(0, 0, cfg.s3_axis);
        layer.extend(block_chain(0));
        Self::new(STATS_PER_PATCH, cfg.depth, layer)
    }

    /// Two patches on qubits 0..4 and 4..8, both chains, then CZ(3,4) joining
    /// the blocks. The whole layer is repeated for `depth > 1`.
    pub fn patch_pair(cfg: EmbeddingConfig) -> Result<Self> {
        let mut layer = block_rotations(0, 0, cfg.s3_axis);
        layer.extend(block_rotations(4, 4, cfg.s3_axis));
        layer.extend(block_chain(0));
        layer.extend(block_chain(4));
        layer.push(Gate::Cz(3, 4));
        Self::new(2 * STATS_PER_PATCH, cfg.depth, layer)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn n_angles(&self) -> usize {
        self.n_angles
    }

    /// One layer of gates, in application order.
    pub fn layer(&self) -> &[Gate] {
        &self.layer
    }

    /// Apply the circuit to `|0…0⟩` with the given rotation angles.
    pub fn prepare(&self, angles: &[f64]) -> Result<StateVector> {
        if angles.len() != self.n_angles {
            return Err(Error::DimensionMismatch {
                what: "circuit angles",
                expected: self.n_angles,
                got: angles.len(),
            });
        }
        let mut state = StateVector::zero(self.n_qubits);
        for _ in 0..self.depth {
            for g in &self.layer {
                match *g {
                    Gate::Rotation { axis, qubit, angle } => {
                        state.apply_rotation(axis, qubit, angles[angle])?
                    }
                    Gate::Cz(a, b) => state.apply_cz(a, b)?,
                }
            }
        }
        Ok(state)
    }
}

fn block_rotations(q0: usize, a0: usize, s3_axis: Axis) -> Vec<Gate> {
    [Axis::X, Axis::Y, s3_axis, Axis::Y]
        .into_iter()
        .enumerate()
        .map(|(i, axis)| Gate::Rotation {
            axis,
            qubit: q0 + i,
            angle: a0 + i,
        })
        .collect()
}

fn block_chain(q0: usize) -> Vec<Gate> {
    (0..STATS_PER_PATCH - 1)
        .map(|i| Gate::Cz(q0 + i, q0 + i + 1))
        .collect()
}

/// Four-qubit embedding of one patch summary.
pub fn embed_patch(stats: [f64; 4], cfg: EmbeddingConfig) -> Result<StateVector> {
    CircuitSpec::single_patch(cfg)?.prepare(&stats)
}

/// Eight-qubit embedding of two patch summaries.
pub fn embed_pair(first: [f64; 4], second: [f64; 4], cfg: EmbeddingConfig) -> Result<StateVector> {
    let angles: Vec<f64> = first.into_iter().chain(second).collect();
    CircuitSpec::patch_pair(cfg)?.prepare(&angles)
}
