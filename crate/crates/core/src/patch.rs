//! Time–frequency patch summaries and top-k selection.
//!
//! A standardized spectrogram is cut into non-overlapping square patches.
//! Each patch is reduced to four statistics: mean activation, spectral
//! centroid and bandwidth over the local bins, and the mean cosine similarity
//! of adjacent frames. The patches with the highest mean activation supply the
//! feature vector.

use serde::{Deserialize, Serialize};

use crate::dsp::Spectrogram;
use crate::error::{Error, Result};
use crate::EPSILON;

pub const DEFAULT_PATCH_SIZE: usize = 4;
pub const DEFAULT_TOP_K: usize = 2;

/// Where a patch came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatchLocation {
    /// Position in the time-major patch enumeration.
    pub index: usize,
    /// Frame of the top-left corner.
    pub time_index: usize,
    /// Mel bin of the top-left corner.
    pub freq_index: usize,
}

/// A `size x size` block, stored row-major with rows as frames.
#[derive(Debug, Clone, PartialEq)]
pub struct Patch {
    size: usize,
    values: Vec<f64>,
    location: PatchLocation,
}

impl Patch {
    pub fn new(size: usize, values: Vec<f64>, location: PatchLocation) -> Result<Self> {
        if size < 2 {
            return Err(Error::invalid("patch_size", "must be at least 2"));
        }
        if values.len() != size * size {
            return Err(Error::DimensionMismatch {
                what: "patch values",
                expected: size * size,
                got: values.len(),
            });
        }
        Ok(Self {
            size,
            values,
            location,
        })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn location(&self) -> PatchLocation {
        self.location
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn frame(&self, t: usize) -> &[f64] {
        &self.values[t * self.size..(t + 1) * self.size]
    }
}

/// Cut `spec` into non-overlapping `size x size` patches in time-major order.
/// Trailing frames and bins that do not fill a whole patch are dropped.
pub fn partition(spec: &Spectrogram, size: usize) -> Result<Vec<Patch>> {
    if size < 2 {
        return Err(Error::invalid("patch_size", "must be at least 2"));
    }
    let (frames, bins) = spec.values().dim();
    if frames < size {
        return Err(Error::TooShortForPatch {
            frames,
            patch: size,
        });
    }
    if bins < size {
        return Err(Error::DimensionMismatch {
            what: "mel bins for one patch",
            expected: size,
            got: bins,
        });
    }
    let (n_t, n_f) = (frames / size, bins / size);
    let v = spec.values();
    let mut patches = Vec::with_capacity(n_t * n_f);
    for bt in 0..n_t {
        for bf in 0..n_f {
            let (t0, f0) = (bt * size, bf * size);
            let values = (0..size)
                .flat_map(|dt| (0..size).map(move |df| (t0 + dt, f0 + df)))
                .map(|(t, f)| v[[t, f]])
                .collect();
            patches.push(Patch {
                size,
                values,
                location: PatchLocation {
                    index: patches.len(),
                    time_index: t0,
                    freq_index: f0,
                },
            });
        }
    }
    Ok(patches)
}

/// Four-statistic descriptor of one patch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PatchSummary {
    /// Mean activation.
    pub s1: f64,
    /// Spectral centroid over local bins `0..size`.
    pub s2: f64,
    /// Spectral bandwidth around the centroid.
    pub s3: f64,
    /// Mean adjacent-frame cosine similarity.
    pub s4: f64,
    /// Ranking score (equal to `s1`).
    pub score: f64,
    pub source: PatchLocation,
}

impl PatchSummary {
    pub fn stats(&self) -> [f64; 4] {
        [self.s1, self.s2, self.s3, self.s4]
    }
}

/// Normalized column weights `(|m̄_f| + ε) / Σ (|m̄_f'| + ε)`.
pub fn column_weights(p: &Patch) -> Vec<f64> {
    let n = p.size();
    let col_mean: Vec<f64> = (0..n)
        .map(|f| (0..n).map(|t| p.frame(t)[f]).sum::<f64>() / n as f64)
        .collect();
    let raw: Vec<f64> = col_mean.iter().map(|m| m.abs() + EPSILON).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|r| r / total).collect()
}

pub fn summarize(p: &Patch) -> PatchSummary {
    let n = p.size();
    let s1 = p.values().iter().sum::<f64>() / (n * n) as f64;

    let w = column_weights(p);
    let s2: f64 = w.iter().enumerate().map(|(f, wf)| f as f64 * wf).sum();
    let s3 = w
        .iter()
        .enumerate()
        .map(|(f, wf)| (f as f64 - s2).powi(2) * wf)
        .sum::<f64>()
        .sqrt();

    let s4 = (0..n - 1)
        .map(|t| {
            let (a, b) = (p.frame(t), p.frame(t + 1));
            let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
            dot / (norm(a) * norm(b) + EPSILON)
        })
        .sum::<f64>()
        / (n - 1) as f64;

    PatchSummary {
        s1,
        s2,
        s3,
        s4,
        score: s1,
        source: p.location(),
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// The `k` summaries with the largest score, ordered by descending score and
/// then ascending patch index.
pub fn select_top_k(summaries: &[PatchSummary], k: usize) -> Result<Vec<PatchSummary>> {
    if k == 0 {
        return Err(Error::invalid("k", "must be at least 1"));
    }
    if k > summaries.len() {
        return Err(Error::invalid(
            "k",
            format!("requested {k} patches but only {} exist", summaries.len()),
        ));
    }
    let mut ranked: Vec<&PatchSummary> = summaries.iter().collect();
    ranked.sort_by(|a, b| {
        b.score
            .total_cmp(&a.score)
            .then(a.source.index.cmp(&b.source.index))
    });
    Ok(ranked.into_iter().take(k).copied().collect())
}

/// Concatenated `(s1, s2, s3, s4)` blocks of the selected patches.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub values: Vec<f64>,
    pub patch_order: Vec<PatchLocation>,
}

impl FeatureVector {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn n_patches(&self) -> usize {
        self.patch_order.len()
    }
}

impl AsRef<[f64]> for FeatureVector {
    fn as_ref(&self) -> &[f64] {
        &self.values
    }
}

pub fn make_feature_vector(selected: &[PatchSummary]) -> Result<FeatureVector> {
    if selected.is_empty() {
        return Err(Error::invalid("selected", "no patch summaries"));
    }
    Ok(FeatureVector {
        values: selected.iter().flat_map(|s| s.stats()).collect(),
        patch_order: selected.iter().map(|s| s.source).collect(),
    })
}

/// Spectrogram to feature vector: partition, summarize, rank, concatenate.
pub fn extract_features(spec: &Spectrogram, patch_size: usize, k: usize) -> Result<FeatureVector> {
    let summaries: Vec<PatchSummary> = partition(spec, patch_size)?.iter().map(summarize).collect();
    make_feature_vector(&select_top_k(&summaries, k)?)
}
