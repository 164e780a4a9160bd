//! Kernel specifications, Gram matrices and their persistence.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use nalgebra::DMatrix;
use ndarray::Array2;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::par::{map_range, map_slice, Execution};
use crate::quantum::{Embedding, EmbeddingConfig, FeatureMap};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelKind {
    Quantum,
    Rbf,
}

impl KernelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            KernelKind::Quantum => "quantum",
            KernelKind::Rbf => "rbf",
        }
    }
}

impl std::fmt::Display for KernelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for KernelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "quantum" => Ok(KernelKind::Quantum),
            "rbf" => Ok(KernelKind::Rbf),
            _ => Err(Error::invalid("kind", format!("expected quantum or rbf, got {s:?}"))),
        }
    }
}

/// A fully resolved kernel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum KernelSpec {
    Quantum(EmbeddingConfig),
    Rbf { gamma: f64 },
}

impl KernelSpec {
    pub fn kind(&self) -> KernelKind {
        match self {
            KernelSpec::Quantum(_) => KernelKind::Quantum,
            KernelSpec::Rbf { .. } => KernelKind::Rbf,
        }
    }
}

/// How the RBF width is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum GammaPolicy {
    /// `1 / (dim * var)` over all training feature entries.
    #[default]
    Scale,
    Fixed(f64),
}

impl GammaPolicy {
    pub fn resolve<F: AsRef<[f64]>>(&self, train: &[F]) -> Result<f64> {
        match *self {
            GammaPolicy::Fixed(g) if g >= 0.0 && g.is_finite() => Ok(g),
            GammaPolicy::Fixed(g) => Err(Error::invalid("gamma", format!("{g} is not a finite non-negative value"))),
            GammaPolicy::Scale => scale_gamma(train),
        }
    }
}

pub fn scale_gamma<F: AsRef<[f64]>>(train: &[F]) -> Result<f64> {
    let dim = uniform_len(train)?;
    let all: Vec<f64> = train.iter().flat_map(|x| x.as_ref().iter().copied()).collect();
    let n = all.len() as f64;
    let mean = all.iter().sum::<f64>() / n;
    let var = all.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    Ok(if var > 0.0 { 1.0 / (dim as f64 * var) } else { 1.0 })
}

/// `exp(-γ ‖x - y‖²)`.
pub fn rbf_kernel(x: &[f64], y: &[f64], gamma: f64) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            what: "feature vector lengths",
            expected: x.len(),
            got: y.len(),
        });
    }
    let d2: f64 = x.iter().zip(y).map(|(a, b)| (a - b).powi(2)).sum();
    Ok((-gamma * d2).exp())
}

fn uniform_len<F: AsRef<[f64]>>(features: &[F]) -> Result<usize> {
    let first = features
        .first()
        .ok_or_else(|| Error::invalid("features", "empty feature list"))?
        .as_ref()
        .len();
    if first == 0 {
        return Err(Error::invalid("features", "zero-length feature vector"));
    }
    if let Some(bad) = features.iter().find(|f| f.as_ref().len() != first) {
        return Err(Error::DimensionMismatch {
            what: "ragged feature vectors",
            expected: first,
            got: bad.as_ref().len(),
        });
    }
    Ok(first)
}

/// Features prepared once so that each pairwise evaluation is cheap.
enum Prepared<'a> {
    Quantum(Vec<Embedding>),
    Rbf(Vec<&'a [f64]>, f64),
}

impl<'a> Prepared<'a> {
    fn new<F: AsRef<[f64]> + Sync>(features: &'a [F], spec: &KernelSpec, exec: Execution) -> Result<Self> {
        uniform_len(features)?;
        Ok(match *spec {
            KernelSpec::Quantum(cfg) => {
                let fm = FeatureMap::new(cfg)?;
                let emb = map_slice(features, exec, |x| fm.embed(x.as_ref()));
                Prepared::Quantum(emb.into_iter().collect::<Result<_>>()?)
            }
            KernelSpec::Rbf { gamma } => Prepared::Rbf(features.iter().map(|f| f.as_ref()).collect(), gamma),
        })
    }

    fn eval(&self, other: &Prepared<'_>, i: usize, j: usize) -> Result<f64> {
        match (self, other) {
            (Prepared::Quantum(a), Prepared::Quantum(b)) => a[i].fidelity(&b[j]),
            (Prepared::Rbf(a, g), Prepared::Rbf(b, _)) => rbf_kernel(a[i], b[j], *g),
            _ => unreachable!("mixed kernel preparations"),
        }
    }
}

/// Symmetric kernel matrix over a training set, tagged with what produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct GramMatrix {
    values: Array2<f64>,
    spec: KernelSpec,
    config_hash: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct GramSidecar {
    kernel: KernelSpec,
    config_hash: String,
    rows: usize,
    cols: usize,
}

impl GramMatrix {
    pub fn from_parts(values: Array2<f64>, spec: KernelSpec, config_hash: String) -> Result<Self> {
        if values.nrows() != values.ncols() {
            return Err(Error::DimensionMismatch {
                what: "gram matrix must be square",
                expected: values.nrows(),
                got: values.ncols(),
            });
        }
        Ok(Self {
            values,
            spec,
            config_hash,
        })
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn spec(&self) -> &KernelSpec {
        &self.spec
    }

    pub fn kind(&self) -> KernelKind {
        self.spec.kind()
    }

    pub fn config_hash(&self) -> &str {
        &self.config_hash
    }

    pub fn max_asymmetry(&self) -> f64 {
        let n = self.len();
        (0..n)
            .flat_map(|i| (0..i).map(move |j| (i, j)))
            .map(|(i, j)| (self.values[[i, j]] - self.values[[j, i]]).abs())
            .fold(0.0, f64::max)
    }

    pub fn max_diagonal_deviation(&self) -> f64 {
        self.values.diag().iter().map(|d| (d - 1.0).abs()).fold(0.0, f64::max)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        symmetric_eigenvalues(&self.values).into_iter().fold(f64::INFINITY, f64::min)
    }

    /// Copy with the principal submatrix on `idx`.
    pub fn select(&self, idx: &[usize]) -> GramMatrix {
        let values = Array2::from_shape_fn((idx.len(), idx.len()), |(a, b)| self.values[[idx[a], idx[b]]]);
        GramMatrix {
            values,
            spec: self.spec,
            config_hash: self.config_hash.clone(),
        }
    }

    /// Matrix as CSV (no header) plus `<path>.json` describing the kernel.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        write_matrix_csv(path, &self.values)?;
        let side = GramSidecar {
            kernel: self.spec,
            config_hash: self.config_hash.clone(),
            rows: self.len(),
            cols: self.len(),
        };
        write_json(&path.with_extension("json"), &side)
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let side: GramSidecar = read_json(&path.with_extension("json"))?;
        let values = read_matrix_csv(path)?;
        if values.dim() != (side.rows, side.cols) {
            return Err(Error::Malformed {
                path: path.to_path_buf(),
                reason: format!("shape {:?} disagrees with sidecar {}x{}", values.dim(), side.rows, side.cols),
            });
        }
        Self::from_parts(values, side.kernel, side.config_hash)
    }
}

pub(crate) fn symmetric_eigenvalues(values: &Array2<f64>) -> Vec<f64> {
    let n = values.nrows();
    let m = DMatrix::from_fn(n, n, |i, j| 0.5 * (values[[i, j]] + values[[j, i]]));
    m.symmetric_eigenvalues().iter().copied().collect()
}

/// Hash of the kernel parameters and the exact feature bits.
pub fn config_hash<F: AsRef<[f64]>>(features: &[F], spec: &KernelSpec) -> String {
    let mut h = Sha256::new();
    h.update(serde_json::to_vec(spec).expect("kernel spec serializes"));
    for f in features {
        h.update((f.as_ref().len() as u64).to_le_bytes());
        for v in f.as_ref() {
            h.update(v.to_bits().to_le_bytes());
        }
    }
    hex::encode(h.finalize())
}

pub fn build_gram<F: AsRef<[f64]> + Sync>(features: &[F], spec: &KernelSpec) -> Result<GramMatrix> {
    build_gram_with(features, spec, Execution::default())
}

/// `K_ij = κ(x_i, x_j)`, evaluated for `i <= j` and mirrored.
pub fn build_gram_with<F: AsRef<[f64]> + Sync>(
    features: &[F],
    spec: &KernelSpec,
    exec: Execution,
) -> Result<GramMatrix> {
    let prepared = Prepared::new(features, spec, exec)?;
    let n = features.len();
    let rows = map_range(n, exec, |i| {
        (i..n).map(|j| prepared.eval(&prepared, i, j)).collect::<Result<Vec<f64>>>()
    });
    let mut values = Array2::zeros((n, n));
    for (i, row) in rows.into_iter().enumerate() {
        for (off, v) in row?.into_iter().enumerate() {
            values[[i, i + off]] = v;
            values[[i + off, i]] = v;
        }
    }
    GramMatrix::from_parts(values, *spec, config_hash(features, spec))
}

/// Test-versus-train kernel block: row `u` holds `κ(test_u, train_j)`.
pub fn cross_kernel<F: AsRef<[f64]> + Sync, G: AsRef<[f64]> + Sync>(
    test: &[F],
    train: &[G],
    spec: &KernelSpec,
    exec: Execution,
) -> Result<Array2<f64>> {
    let dim_train = uniform_len(train)?;
    if test.is_empty() {
        return Ok(Array2::zeros((0, train.len())));
    }
    let dim_test = uniform_len(test)?;
    if dim_test != dim_train {
        return Err(Error::DimensionMismatch {
            what: "test vs train feature length",
            expected: dim_train,
            got: dim_test,
        });
    }
    let p_test = Prepared::new(test, spec, exec)?;
    let p_train = Prepared::new(train, spec, exec)?;
    let rows = map_range(test.len(), exec, |u| {
        (0..train.len()).map(|j| p_test.eval(&p_train, u, j)).collect::<Result<Vec<f64>>>()
    });
    let mut out = Array2::zeros((test.len(), train.len()));
    for (u, row) in rows.into_iter().enumerate() {
        out.row_mut(u).assign(&ndarray::Array1::from(row?));
    }
    Ok(out)
}

pub fn write_matrix_csv(path: &Path, m: &Array2<f64>) -> Result<()> {
    let io = |e| Error::io(path, e);
    let mut out = BufWriter::new(File::create(path).map_err(io)?);
    for row in m.rows() {
        let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        writeln!(out, "{}", line.join(",")).map_err(io)?;
    }
    out.flush().map_err(io)
}

pub fn read_matrix_csv(path: &Path) -> Result<Array2<f64>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let malformed = |reason: String| Error::Malformed {
        path: path.to_path_buf(),
        reason,
    };
    let rows: Vec<Vec<f64>> = text
        .lines()
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .map(|(r, line)| {
            line.split(',')
                .map(|v| v.trim().parse::<f64>().map_err(|e| malformed(format!("row {r}: {e}"))))
                .collect()
        })
        .collect::<Result<_>>()?;
    let cols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != cols) {
        return Err(malformed("ragged rows".into()));
    }
    Array2::from_shape_vec((rows.len(), cols), rows.concat()).map_err(|e| malformed(e.to_string()))
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })?;
    std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

pub(crate) fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })
}
