use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, Result};

type Mat2 = [[Complex64; 2]; 2];

/// Pure state of `n` qubits. Qubit 0 is the most significant bit of the basis
/// index.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    amps: Vec<Complex64>,
    n_qubits: usize,
}

impl StateVector {
    /// `|0…0⟩`.
    pub fn zero(n_qubits: usize) -> Self {
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n_qubits];
        amps[0] = Complex64::new(1.0, 0.0);
        Self { amps, n_qubits }
    }

    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self> {
        if amps.is_empty() || !amps.len().is_power_of_two() {
            return Err(Error::invalid(
                "amplitudes",
                format!("length {} is not a power of two", amps.len()),
            ));
        }
        let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(Error::invalid("amplitudes", format!("squared norm {norm} != 1")));
        }
        let n_qubits = amps.len().trailing_zeros() as usize;
        Ok(Self { amps, n_qubits })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &StateVector) -> Complex64 {
        debug_assert_eq!(self.n_qubits, other.n_qubits);
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// `|⟨self|other⟩|²`.
    pub fn fidelity(&self, other: &StateVector) -> f64 {
        self.inner(other).norm_sqr()
    }

    fn check_qubit(&self, q: usize) -> Result<usize> {
        if q >= self.n_qubits {
            return Err(Error::QubitOutOfRange {
                qubit: q,
                n_qubits: self.n_qubits,
            });
        }
        Ok(1 << (self.n_qubits - 1 - q))
    }

    pub(crate) fn apply_1q(&mut self, qubit: usize, m: &Mat2) -> Result<()> {
        let mask = self.check_qubit(qubit)?;
        for i in 0..self.amps.len() {
            if i & mask == 0 {
                let j = i | mask;
                let (a0, a1) = (self.amps[i], self.amps[j]);
                self.amps[i] = m[0][0] * a0 + m[0][1] * a1;
                self.amps[j] = m[1][0] * a0 + m[1][1] * a1;
            }
        }
        Ok(())
    }

    /// `R_axis(θ) = exp(-iθσ/2)` on `qubit`.
    pub fn apply_rotation(&mut self, axis: super::Axis, qubit: usize, angle: f64) -> Result<()> {
        self.apply_1q(qubit, &axis.rotation(angle))
    }

    /// Controlled-Z: negate every amplitude whose basis index has both bits set.
    pub fn apply_cz(&mut self, a: usize, b: usize) -> Result<()> {
        if a == b {
            return Err(Error::SameQubit(a));
        }
        let mask = self.check_qubit(a)? | self.check_qubit(b)?;
        self.amps
            .iter_mut()
            .enumerate()
            .filter(|(i, _)| i & mask == mask)
            .for_each(|(_, amp)| *amp = -*amp);
        Ok(())
    }

    /// Debug dump: `index,re,im` per basis state.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let io = |e| Error::io(path, e);
        let mut out = BufWriter::new(File::create(path).map_err(io)?);
        writeln!(out, "index,re,im").map_err(io)?;
        for (i, a) in self.amps.iter().enumerate() {
            writeln!(out, "{i},{},{}", a.re, a.im).map_err(io)?;
        }
        out.flush().map_err(io)
    }
}

#[cfg(test)]
mod tests {
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    use super::super::Axis;
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn ry_pi_flips() {
        let mut s = StateVector::zero(1);
        s.apply_rotation(Axis::Y, 0, PI).unwrap();
        let one = StateVector::from_amplitudes(vec![c(0.0), c(1.0)]).unwrap();
        assert!((s.fidelity(&one) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rz_on_zero_is_phase_only() {
        let before = StateVector::zero(3);
        let mut s = before.clone();
        s.apply_rotation(Axis::Z, 1, 1.234).unwrap();
        assert!((s.fidelity(&before) - 1.0).abs() < 1e-12);
        for (a, b) in s.amplitudes().iter().zip(before.amplitudes()) {
            assert!((a.norm() - b.norm()).abs() < 1e-15);
        }
    }

    #[test]
    fn cz_examples() {
        let mut s = StateVector::zero(2);
        s.apply_cz(0, 1).unwrap();
        assert_eq!(s, StateVector::zero(2));

        let h = FRAC_1_SQRT_2;
        let mut bell = StateVector::from_amplitudes(vec![c(h), c(0.0), c(0.0), c(h)]).unwrap();
        bell.apply_cz(0, 1).unwrap();
        assert_eq!(bell.amplitudes(), &[c(h), c(0.0), c(0.0), c(-h)]);
    }

    #[test]
    fn gate_errors() {
        let mut s = StateVector::zero(4);
        assert!(matches!(s.apply_cz(2, 2), Err(Error::SameQubit(2))));
        assert!(matches!(
            s.apply_rotation(Axis::X, 4, 0.1),
            Err(Error::QubitOutOfRange { qubit: 4, n_qubits: 4 })
        ));
        assert!(s.apply_cz(0, 9).is_err());
    }

    #[test]
    fn qubit_zero_is_msb() {
        let mut s = StateVector::zero(3);
        s.apply_rotation(Axis::X, 0, PI).unwrap();
        assert!((s.amplitudes()[0b100].norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn from_amplitudes_validation() {
        assert!(StateVector::from_amplitudes(vec![c(1.0), c(0.0), c(0.0)]).is_err());
        assert!(StateVector::from_amplitudes(vec![c(1.0), c(1.0)]).is_err());
    }

    #[test]
    fn csv_dump() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.csv");
        StateVector::zero(2).write_csv(&p).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert_eq!(text.lines().count(), 5);
        assert!(text.starts_with("index,re,im\n0,1,0\n"));
    }
}
