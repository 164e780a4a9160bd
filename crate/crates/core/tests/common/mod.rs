//! Independent reference implementations used by the integration tests.
//! Nothing here calls into the library's numerical code.

#![allow(dead_code)]

use ndarray::Array2;
use num_complex::Complex64;
use qpatch_core::quantum::Axis;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Dense = Vec<Vec<Complex64>>;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn identity(n: usize) -> Dense {
    (0..n).map(|i| (0..n).map(|j| if i == j { ONE } else { ZERO }).collect()).collect()
}

pub fn kron(a: &Dense, b: &Dense) -> Dense {
    let (ra, rb) = (a.len(), b.len());
    let mut out = vec![vec![ZERO; ra * rb]; ra * rb];
    for i in 0..ra {
        for j in 0..ra {
            for k in 0..rb {
                for l in 0..rb {
                    out[i * rb + k][j * rb + l] = a[i][j] * b[k][l];
                }
            }
        }
    }
    out
}

pub fn matmul(a: &Dense, b: &Dense) -> Dense {
    let n = a.len();
    let mut out = vec![vec![ZERO; n]; n];
    for i in 0..n {
        for k in 0..n {
            if a[i][k] == ZERO {
                continue;
            }
            for j in 0..n {
                out[i][j] += a[i][k] * b[k][j];
            }
        }
    }
    out
}

pub fn matvec(a: &Dense, v: &[Complex64]) -> Vec<Complex64> {
    a.iter().map(|row| row.iter().zip(v).map(|(x, y)| x * y).sum()).collect()
}

pub fn pauli(axis: Axis) -> Dense {
    match axis {
        Axis::X => vec![vec![ZERO, ONE], vec![ONE, ZERO]],
        Axis::Y => vec![vec![ZERO, -I], vec![I, ZERO]],
        Axis::Z => vec![vec![ONE, ZERO], vec![ZERO, -ONE]],
    }
}

/// `exp(-i θ P / 2) = cos(θ/2) I - i sin(θ/2) P` for a Pauli `P`.
pub fn rotation(axis: Axis, theta: f64) -> Dense {
    let p = pauli(axis);
    let (c, s) = ((theta / 2.0).cos(), (theta / 2.0).sin());
    (0..2)
        .map(|i| (0..2).map(|j| if i == j { ONE * c } else { ZERO } - I * s * p[i][j]).collect())
        .collect()
}

/// `U` acting on `qubit` of an `n`-qubit register, qubit 0 most significant.
pub fn lift(u: &Dense, qubit: usize, n: usize) -> Dense {
    let left = identity(1 << qubit);
    let right = identity(1 << (n - qubit - 1));
    kron(&kron(&left, u), &right)
}

pub fn cz(a: usize, b: usize, n: usize) -> Dense {
    let dim = 1 << n;
    let mut out = identity(dim);
    for (idx, row) in out.iter_mut().enumerate() {
        let bit = |q: usize| (idx >> (n - 1 - q)) & 1;
        if bit(a) == 1 && bit(b) == 1 {
            row[idx] = -ONE;
        }
    }
    out
}

/// Dense gate matrices of one layer, in application order.
fn layer_gates(blocks: &[[f64; 4]], s3_axis: Axis) -> Vec<Dense> {
    let n = 4 * blocks.len();
    let axes = [Axis::X, Axis::Y, s3_axis, Axis::Y];
    let mut gates = Vec::new();
    for (b, s) in blocks.iter().enumerate() {
        for q in 0..4 {
            gates.push(lift(&rotation(axes[q], s[q]), 4 * b + q, n));
        }
    }
    for b in 0..blocks.len() {
        for q in 0..3 {
            gates.push(cz(4 * b + q, 4 * b + q + 1, n));
        }
    }
    if blocks.len() == 2 {
        gates.push(cz(3, 4, n));
    }
    gates
}

/// Circuit applied to `|0...0>` one dense gate matrix at a time.
pub fn dense_embed(blocks: &[[f64; 4]], depth: usize, s3_axis: Axis) -> Vec<Complex64> {
    let gates = layer_gates(blocks, s3_axis);
    let mut v = vec![ZERO; 1 << (4 * blocks.len())];
    v[0] = ONE;
    for _ in 0..depth {
        for g in &gates {
            v = matvec(g, &v);
        }
    }
    v
}

pub fn dense_fidelity(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum::<Complex64>().norm_sqr()
}

/// Kernel oracle: per-pair fidelities averaged, single patch for length 4.
pub fn dense_kernel(x: &[f64], y: &[f64], depth: usize, s3_axis: Axis) -> f64 {
    let block = |v: &[f64], i: usize| -> [f64; 4] { v[4 * i..4 * i + 4].try_into().unwrap() };
    if x.len() == 4 {
        return dense_fidelity(
            &dense_embed(&[block(x, 0)], depth, s3_axis),
            &dense_embed(&[block(y, 0)], depth, s3_axis),
        );
    }
    let pairs = x.len() / 8;
    (0..pairs)
        .map(|p| {
            let ex = dense_embed(&[block(x, 2 * p), block(x, 2 * p + 1)], depth, s3_axis);
            let ey = dense_embed(&[block(y, 2 * p), block(y, 2 * p + 1)], depth, s3_axis);
            dense_fidelity(&ex, &ey)
        })
        .sum::<f64>()
        / pairs as f64
}

pub fn random_stats<R: Rng>(rng: &mut R) -> [f64; 4] {
    [
        rng.random_range(-3.0..3.0),
        rng.random_range(0.0..3.0),
        rng.random_range(0.0..1.5),
        rng.random_range(-1.0..1.0),
    ]
}

pub fn random_features<R: Rng>(rng: &mut R, k: usize) -> Vec<f64> {
    (0..k).flat_map(|_| random_stats(rng)).collect()
}

/// Pair-counting AUROC: correct orderings plus half the ties.
pub fn brute_auroc(scores: &[f64], positive: &[bool]) -> f64 {
    let (mut num, mut pairs) = (0.0, 0.0);
    for i in 0..scores.len() {
        for j in 0..scores.len() {
            if positive[i] && !positive[j] {
                pairs += 1.0;
                if scores[i] > scores[j] {
                    num += 1.0;
                } else if scores[i] == scores[j] {
                    num += 0.5;
                }
            }
        }
    }
    num / pairs
}

/// Threshold sweep: every operating point is recounted from scratch.
/// Returns (eer, threshold) with the first crossing interpolated linearly.
pub fn brute_eer(scores: &[f64], positive: &[bool]) -> (f64, f64) {
    let n_pos = positive.iter().filter(|&&p| p).count() as f64;
    let n_neg = positive.len() as f64 - n_pos;
    let mut thr: Vec<f64> = scores.to_vec();
    thr.sort_by(f64::total_cmp);
    thr.dedup();
    thr.insert(0, f64::NEG_INFINITY);
    thr.push(f64::INFINITY);
    let point = |t: f64| {
        let fa = (0..scores.len()).filter(|&i| !positive[i] && scores[i] >= t).count() as f64;
        let fr = (0..scores.len()).filter(|&i| positive[i] && scores[i] < t).count() as f64;
        (fa / n_neg, fr / n_pos)
    };
    let mut prev: Option<(f64, f64, f64)> = None;
    for &t in &thr {
        let (fpr, fnr) = point(t);
        if fnr >= fpr {
            return match prev {
                None => (fpr, t),
                Some((pt, pfpr, pfnr)) => {
                    let (da, db) = (pfpr - pfnr, fpr - fnr);
                    let w = da / (da - db);
                    let rate = pfpr + w * (fpr - pfpr);
                    let at = match (pt.is_finite(), t.is_finite()) {
                        (true, true) => pt + w * (t - pt),
                        (false, _) => t,
                        (true, false) => pt,
                    };
                    (rate, at)
                }
            };
        }
        prev = Some((t, fpr, fnr));
    }
    unreachable!("+inf threshold rejects every sample")
}

/// Largest KKT gap of the dual `min ½αᵀQα - eᵀα`, `0 ≤ α ≤ C`, `yᵀα = 0`,
/// computed directly from the full multiplier vector.
pub fn kkt_gap(k: &Array2<f64>, y: &[f64], alpha: &[f64], c: f64) -> f64 {
    let n = y.len();
    let grad: Vec<f64> = (0..n)
        .map(|i| (0..n).map(|j| y[i] * y[j] * k[[i, j]] * alpha[j]).sum::<f64>() - 1.0)
        .collect();
    let up = (0..n)
        .filter(|&t| (y[t] > 0.0 && alpha[t] < c) || (y[t] < 0.0 && alpha[t] > 0.0))
        .map(|t| -y[t] * grad[t])
        .fold(f64::NEG_INFINITY, f64::max);
    let low = (0..n)
        .filter(|&t| (y[t] > 0.0 && alpha[t] > 0.0) || (y[t] < 0.0 && alpha[t] < c))
        .map(|t| -y[t] * grad[t])
        .fold(f64::INFINITY, f64::min);
    (up - low).max(0.0)
}

/// Random PSD kernel: RBF over random points.
pub fn random_rbf_problem<R: Rng>(rng: &mut R, n: usize, dim: usize) -> (Array2<f64>, Vec<f64>) {
    let pts: Vec<Vec<f64>> = (0..n).map(|_| (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
    let mut y: Vec<f64> = (0..n).map(|_| if rng.random_bool(0.5) { 1.0 } else { -1.0 }).collect();
    y[0] = 1.0;
    y[1] = -1.0;
    let gamma = rng.random_range(0.2..3.0);
    let k = Array2::from_shape_fn((n, n), |(i, j)| {
        let d2: f64 = pts[i].iter().zip(&pts[j]).map(|(a, b)| (a - b).powi(2)).sum();
        (-gamma * d2).exp()
    });
    (k, y)
}
