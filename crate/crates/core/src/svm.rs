//! Soft-margin binary SVM on a precomputed kernel.
//!
//! The dual is solved by sequential minimal optimization: each step picks the
//! maximal violating pair (first-order working-set selection) and solves the
//! two-variable subproblem in closed form. The gradient `G = Qα - 1` with
//! `Q_ij = y_i y_j K_ij` is kept up to date incrementally.

use std::path::{Path, PathBuf};

use log::warn;
use nalgebra::DMatrix;
use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{read_json, symmetric_eigenvalues, write_json, KernelSpec};

/// Curvature floor for degenerate pairs.
const TAU: f64 = 1e-12;
/// Eigenvalues below `-PSD_SLACK` trigger clipping.
pub const PSD_SLACK: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SvmParams {
    pub c: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SvmParams {
    fn default() -> Self {
        Self {
            c: 1.0,
            tol: 1e-4,
            max_iter: 10_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub support_indices: Vec<usize>,
    /// `α_i y_i` for each support index.
    pub dual_coefs: Vec<f64>,
    pub bias: f64,
    pub c: f64,
    pub n_train: usize,
    pub iterations: usize,
    pub converged: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernel: Option<KernelSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub feature_snapshot: Option<PathBuf>,
}

fn check_labels(y: &[f64]) -> Result<()> {
    if let Some(v) = y.iter().find(|&&v| v != 1.0 && v != -1.0) {
        return Err(Error::invalid("labels", format!("{v} is not ±1")));
    }
    if !(y.contains(&1.0) && y.contains(&-1.0)) {
        return Err(Error::SingleClass);
    }
    Ok(())
}

fn clip_to_psd(k: &Array2<f64>) -> Array2<f64> {
    let n = k.nrows();
    let m = DMatrix::from_fn(n, n, |i, j| 0.5 * (k[[i, j]] + k[[j, i]]));
    let eig = m.symmetric_eigen();
    let vals = eig.eigenvalues.map(|v| v.max(0.0));
    let rebuilt = &eig.eigenvectors * DMatrix::from_diagonal(&vals) * eig.eigenvectors.transpose();
    Array2::from_shape_fn((n, n), |(i, j)| rebuilt[(i, j)])
}

/// Extremes of `-y_t G_t` over the up and low index sets.
struct Violation {
    i: usize,
    j: usize,
    gap: f64,
}

fn most_violating_pair(alpha: &[f64], grad: &[f64], y: &[f64], c: f64) -> Option<Violation> {
    let mut up: Option<(usize, f64)> = None;
    let mut low: Option<(usize, f64)> = None;
    for t in 0..alpha.len() {
        let v = -y[t] * grad[t];
        let in_up = (y[t] > 0.0 && alpha[t] < c) || (y[t] < 0.0 && alpha[t] > 0.0);
        let in_low = (y[t] > 0.0 && alpha[t] > 0.0) || (y[t] < 0.0 && alpha[t] < c);
        if in_up && up.is_none_or(|(_, m)| v > m) {
            up = Some((t, v));
        }
        if in_low && low.is_none_or(|(_, m)| v < m) {
            low = Some((t, v));
        }
    }
    let ((i, m), (j, mm)) = (up?, low?);
    Some(Violation { i, j, gap: m - mm })
}

/// Train on an `N x N` precomputed kernel with labels in `{-1, +1}`.
pub fn train_svm(k: &Array2<f64>, y: &[f64], params: SvmParams) -> Result<SvmModel> {
    let n = y.len();
    if k.dim() != (n, n) {
        return Err(Error::DimensionMismatch {
            what: "kernel rows vs labels",
            expected: n,
            got: k.nrows(),
        });
    }
    check_labels(y)?;
    if !(params.c > 0.0 && params.c.is_finite()) {
        return Err(Error::invalid("C", format!("{} must be positive", params.c)));
    }
    if params.tol.is_nan() || params.tol <= 0.0 {
        return Err(Error::invalid("tol", "must be positive"));
    }

    let min_eig = symmetric_eigenvalues(k).into_iter().fold(f64::INFINITY, f64::min);
    let clipped;
    let k = if min_eig < -PSD_SLACK {
        warn!("kernel matrix not PSD (min eigenvalue {min_eig:e}); clipping negative eigenvalues");
        clipped = clip_to_psd(k);
        &clipped
    } else {
        k
    };

    let c = params.c;
    let q = |a: usize, b: usize| y[a] * y[b] * k[[a, b]];
    let mut alpha = vec![0.0; n];
    let mut grad = vec![-1.0; n];
    let mut iterations = 0;
    let mut converged = false;

    while iterations < params.max_iter {
        let Some(Violation { i, j, gap }) = most_violating_pair(&alpha, &grad, y, c) else {
            converged = true;
            break;
        };
        if gap < params.tol {
            converged = true;
            break;
        }
        iterations += 1;

        let (old_i, old_j) = (alpha[i], alpha[j]);
        let (qii, qjj, qij) = (q(i, i), q(j, j), q(i, j));
        if y[i] != y[j] {
            let quad = (qii + qjj + 2.0 * qij).max(TAU);
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let quad = (qii + qjj - 2.0 * qij).max(TAU);
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }

        let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
        for (t, g) in grad.iter_mut().enumerate() {
            *g += q(t, i) * di + q(t, j) * dj;
        }
    }
    if !converged {
        warn!("SMO stopped after {iterations} iterations without reaching tol {}", params.tol);
    }

    let bias = -rho(&alpha, &grad, y, c);
    let (support_indices, dual_coefs) = alpha
        .iter()
        .enumerate()
        .filter(|(_, &a)| a > 0.0)
        .map(|(t, &a)| (t, a * y[t]))
        .unzip();

    Ok(SvmModel {
        support_indices,
        dual_coefs,
        bias,
        c,
        n_train: n,
        iterations,
        converged,
        kernel: None,
        feature_snapshot: None,
    })
}

/// Offset from the free support vectors, or the midpoint of the feasible
/// interval when every multiplier sits at a bound.
fn rho(alpha: &[f64], grad: &[f64], y: &[f64], c: f64) -> f64 {
    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut sum, mut n_free) = (0.0, 0usize);
    for t in 0..alpha.len() {
        let yg = y[t] * grad[t];
        if alpha[t] >= c {
            if y[t] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if alpha[t] <= 0.0 {
            if y[t] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            n_free += 1;
            sum += yg;
        }
    }
    if n_free > 0 {
        sum / n_free as f64
    } else {
        (ub + lb) / 2.0
    }
}

impl SvmModel {
    /// Full multiplier vector `α` (not multiplied by labels).
    pub fn alphas(&self, y: &[f64]) -> Vec<f64> {
        let mut a = vec![0.0; self.n_train];
        for (&i, &coef) in self.support_indices.iter().zip(&self.dual_coefs) {
            a[i] = coef * y[i];
        }
        a
    }

    /// Largest KKT gap `max_up(-y G) - min_low(-y G)` at the stored solution.
    pub fn kkt_violation(&self, k: &Array2<f64>, y: &[f64]) -> f64 {
        let alpha = self.alphas(y);
        let n = self.n_train;
        let grad: Vec<f64> = (0..n)
            .map(|t| {
                self.support_indices
                    .iter()
                    .zip(&self.dual_coefs)
                    .map(|(&i, &coef)| y[t] * coef * k[[t, i]])
                    .sum::<f64>()
                    - 1.0
            })
            .collect();
        most_violating_pair(&alpha, &grad, y, self.c).map_or(0.0, |v| v.gap.max(0.0))
    }

    /// `f(x) = Σ α_i y_i K(x, x_i) + b` for each row of test-vs-train kernel
    /// values.
    pub fn decision_scores(&self, rows: &Array2<f64>) -> Result<Vec<f64>> {
        if rows.ncols() != self.n_train {
            return Err(Error::DimensionMismatch {
                what: "kernel row length vs training set",
                expected: self.n_train,
                got: rows.ncols(),
            });
        }
        Ok(rows
            .rows()
            .into_iter()
            .map(|r| {
                self.support_indices
                    .iter()
                    .zip(&self.dual_coefs)
                    .map(|(&i, &coef)| coef * r[i])
                    .sum::<f64>()
                    + self.bias
            })
            .collect())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        write_json(path.as_ref(), self)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        read_json(path.as_ref())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn two_point_closed_form() {
        let k = array![[1.0, 0.0], [0.0, 1.0]];
        let m = train_svm(&k, &[1.0, -1.0], SvmParams::default()).unwrap();
        let a = m.alphas(&[1.0, -1.0]);
        assert!((a[0] - 1.0).abs() < 1e-12 && (a[1] - 1.0).abs() < 1e-12);
        assert!(m.bias.abs() < 1e-12);
        let s = m.decision_scores(&k).unwrap();
        assert!(s[0] > 0.0 && s[1] < 0.0);
    }

    #[test]
    fn single_class_rejected() {
        let k = Array2::eye(3);
        assert!(matches!(
            train_svm(&k, &[1.0, 1.0, 1.0], SvmParams::default()),
            Err(Error::SingleClass)
        ));
        assert!(train_svm(&k, &[1.0, 0.0, -1.0], SvmParams::default()).is_err());
    }

    #[test]
    fn zero_row_scores_bias() {
        let k = array![[1.0, 0.2], [0.2, 1.0]];
        let m = train_svm(&k, &[1.0, -1.0], SvmParams::default()).unwrap();
        let s = m.decision_scores(&Array2::zeros((1, 2))).unwrap();
        assert_eq!(s[0], m.bias);
        assert!(m.decision_scores(&Array2::zeros((1, 3))).is_err());
    }

    #[test]
    fn non_psd_kernel_is_clipped_and_trains() {
        let k = array![[1.0, 2.0, 0.0], [2.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        let m = train_svm(&k, &[1.0, -1.0, 1.0], SvmParams::default()).unwrap();
        assert!(m.converged);
    }

    #[test]
    fn dual_feasibility() {
        let x: Vec<f64> = (0..12).map(|i| (i as f64 * 1.3).sin()).collect();
        let y: Vec<f64> = x.iter().map(|v| if *v + 0.1 > 0.0 { 1.0 } else { -1.0 }).collect();
        let k = Array2::from_shape_fn((12, 12), |(i, j)| (-(x[i] - x[j]).powi(2)).exp());
        let p = SvmParams {
            c: 0.5,
            ..SvmParams::default()
        };
        let m = train_svm(&k, &y, p).unwrap();
        let a = m.alphas(&y);
        assert!(a.iter().all(|&v| (0.0..=0.5).contains(&v)));
        let eq: f64 = a.iter().zip(&y).map(|(a, y)| a * y).sum();
        assert!(eq.abs() < 1e-8);
        assert!(m.kkt_violation(&k, &y) <= 1.5 * p.tol);
    }

    #[test]
    fn model_json_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let k = array![[1.0, 0.3], [0.3, 1.0]];
        let m = train_svm(&k, &[-1.0, 1.0], SvmParams::default()).unwrap();
        let p = dir.path().join("m.json");
        m.save(&p).unwrap();
        assert_eq!(SvmModel::load(&p).unwrap(), m);
    }
}
