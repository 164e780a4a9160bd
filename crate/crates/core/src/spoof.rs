//! Controlled spoof generation and the balanced train/dev manifest.

use std::path::{Path, PathBuf};

use log::warn;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::dsp::{read_wav, resample, write_wav_pcm16, Waveform};
use crate::error::{Error, Result};
use crate::par::{map_slice, Execution};
use crate::rng;

/// Below this RMS the tilt output is passed through without renormalization.
pub const RMS_GUARD: f64 = 1e-6;
pub const SPOOF_RATE: u32 = 16_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SpoofConfig {
    /// Target signal-to-noise ratio of the additive noise; `null` in JSON
    /// (infinity) disables the noise stage.
    #[serde(with = "snr_serde")]
    pub snr_db: f64,
    /// Tilt coefficients are drawn uniformly from `[lo, hi)`.
    pub tilt_range: (f64, f64),
    pub seed: u64,
}

pub(crate) mod snr_serde {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_infinite() {
            s.serialize_none()
        } else {
            s.serialize_f64(*v)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

impl Default for SpoofConfig {
    fn default() -> Self {
        Self {
            snr_db: 20.0,
            tilt_range: (-0.6, 0.6),
            seed: 0,
        }
    }
}

impl SpoofConfig {
    pub fn validate(&self) -> Result<()> {
        if self.snr_db.is_nan() || self.snr_db == f64::NEG_INFINITY {
            return Err(Error::invalid("snr_db", "must be finite or +inf"));
        }
        let (lo, hi) = self.tilt_range;
        if !(lo > -1.0 && hi < 1.0 && lo <= hi) {
            return Err(Error::invalid(
                "tilt_range",
                format!("({lo}, {hi}) must satisfy -1 < lo <= hi < 1"),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseReport {
    /// Fraction of output samples that hit ±1.
    pub clipped_fraction: f64,
}

/// Add white Gaussian noise scaled so that the realized noise power gives
/// exactly `snr_db` against the input, then clip to [-1, 1].
pub fn add_noise<R: Rng + ?Sized>(w: &Waveform, snr_db: f64, rng: &mut R) -> Result<(Waveform, NoiseReport)> {
    if snr_db == f64::INFINITY {
        return Ok((w.clone(), NoiseReport { clipped_fraction: 0.0 }));
    }
    if !snr_db.is_finite() {
        return Err(Error::invalid("snr_db", format!("{snr_db}")));
    }
    let p_signal = w.power();
    if p_signal <= 0.0 {
        return Err(Error::ZeroPower);
    }
    let g: Vec<f64> = (0..w.len()).map(|_| rng.sample(StandardNormal)).collect();
    let p_g = g.iter().map(|v| v * v).sum::<f64>() / g.len() as f64;
    let p_target = p_signal / 10f64.powf(snr_db / 10.0);
    let scale = if p_g > 0.0 { (p_target / p_g).sqrt() } else { 0.0 };

    let mut clipped = 0usize;
    let out: Vec<f64> = w
        .samples()
        .iter()
        .zip(&g)
        .map(|(x, n)| {
            let v = x + scale * n;
            if v.abs() >= 1.0 {
                clipped += 1;
            }
            v.clamp(-1.0, 1.0)
        })
        .collect();
    let report = NoiseReport {
        clipped_fraction: clipped as f64 / out.len() as f64,
    };
    Ok((Waveform::new(out, w.sample_rate())?, report))
}

/// First-order tilt `y[n] = x[n] - tilt * x[n-1]`, rescaled to the input RMS.
pub fn spectral_distort(w: &Waveform, tilt: f64) -> Result<Waveform> {
    if tilt.is_nan() || tilt.abs() >= 1.0 {
        return Err(Error::invalid("tilt", format!("|{tilt}| must be < 1")));
    }
    let x = w.samples();
    let mut y: Vec<f64> = x
        .iter()
        .enumerate()
        .map(|(n, &v)| v - tilt * if n > 0 { x[n - 1] } else { 0.0 })
        .collect();
    let rms_out = (y.iter().map(|v| v * v).sum::<f64>() / y.len() as f64).sqrt();
    if rms_out < RMS_GUARD {
        warn!("spectral tilt output RMS {rms_out:e} below guard; skipping renormalization");
    } else {
        let gain = w.rms() / rms_out;
        y.iter_mut().for_each(|v| *v *= gain);
    }
    Waveform::new(y, w.sample_rate())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Bonafide,
    Spoof,
}

impl Label {
    /// SVM target: bona fide is the positive class.
    pub fn sign(self) -> f64 {
        match self {
            Label::Bonafide => 1.0,
            Label::Spoof => -1.0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Bonafide => "bonafide",
            Label::Spoof => "spoof",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Dev,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub id: String,
    pub path: PathBuf,
    pub label: Label,
    pub split: Split,
    pub source_id: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DatasetCounts {
    /// Bona fide files used; one spoof is made from each.
    pub n_bonafide: usize,
    /// Share of each class held out for dev, rounded to whole utterances.
    pub dev_fraction: f64,
}

impl Default for DatasetCounts {
    fn default() -> Self {
        Self {
            n_bonafide: 50,
            dev_fraction: 0.2,
        }
    }
}

impl DatasetCounts {
    pub fn dev_per_class(&self) -> usize {
        (self.n_bonafide as f64 * self.dev_fraction).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_bonafide == 0 {
            return Err(Error::invalid("n_bonafide", "must be at least 1"));
        }
        if !(0.0..1.0).contains(&self.dev_fraction) {
            return Err(Error::invalid("dev_fraction", format!("{} outside [0, 1)", self.dev_fraction)));
        }
        if self.dev_per_class() == 0 || self.dev_per_class() == self.n_bonafide {
            return Err(Error::invalid(
                "dev_fraction",
                format!("{} of {} leaves an empty split", self.dev_fraction, self.n_bonafide),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetManifest {
    pub entries: Vec<ManifestEntry>,
    pub seed: u64,
}

impl DatasetManifest {
    pub fn split(&self, split: Split) -> impl Iterator<Item = &ManifestEntry> {
        self.entries.iter().filter(move |e| e.split == split)
    }

    pub fn count(&self, split: Split, label: Label) -> usize {
        self.split(split).filter(|e| e.label == label).count()
    }

    /// CSV with header `id,path,label,split,source_id`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let csv_err = |source| Error::Csv {
            path: path.to_path_buf(),
            source,
        };
        let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
        for e in &self.entries {
            w.serialize(e).map_err(csv_err)?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn read_csv(path: &Path, seed: u64) -> Result<Self> {
        let csv_err = |source| Error::Csv {
            path: path.to_path_buf(),
            source,
        };
        let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
        let entries = r
            .deserialize()
            .collect::<std::result::Result<Vec<ManifestEntry>, _>>()
            .map_err(csv_err)?;
        Ok(Self { entries, seed })
    }
}

/// Sorted `.wav` files directly inside `dir`.
pub fn list_wavs(dir: &Path) -> Result<Vec<PathBuf>> {
    let rd = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut files = Vec::new();
    for entry in rd {
        let p = entry.map_err(|e| Error::io(dir, e))?.path();
        if p.is_file() && p.extension().is_some_and(|x| x.eq_ignore_ascii_case("wav")) {
            files.push(p);
        }
    }
    files.sort();
    Ok(files)
}

fn stem(p: &Path) -> String {
    p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

/// Apply the spoof recipe (noise, then a random tilt) to one utterance.
pub fn make_spoof(w: &Waveform, cfg: &SpoofConfig, id: &str) -> Result<(Waveform, f64, NoiseReport)> {
    let mut r = rng::stream(cfg.seed, "spoof", id);
    let w = resample(w, SPOOF_RATE)?;
    let (noisy, report) = add_noise(&w, cfg.snr_db, &mut r)?;
    let (lo, hi) = cfg.tilt_range;
    let tilt = if lo < hi { r.random_range(lo..hi) } else { lo };
    Ok((spectral_distort(&noisy, tilt)?, tilt, report))
}

/// Select the first `counts.n_bonafide` WAVs in `bonafide_dir`, write one spoof
/// per file under `spoof_dir`, and split both classes into train/dev with a
/// seeded shuffle.
pub fn build_dataset(
    bonafide_dir: &Path,
    spoof_dir: &Path,
    cfg: &SpoofConfig,
    counts: DatasetCounts,
) -> Result<DatasetManifest> {
    cfg.validate()?;
    counts.validate()?;
    let files = list_wavs(bonafide_dir)?;
    if files.len() < counts.n_bonafide {
        return Err(Error::InsufficientFiles {
            dir: bonafide_dir.to_path_buf(),
            found: files.len(),
            needed: counts.n_bonafide,
        });
    }
    let files = &files[..counts.n_bonafide];
    std::fs::create_dir_all(spoof_dir).map_err(|e| Error::io(spoof_dir, e))?;

    let spoofs = map_slice(files, Execution::default(), |src| -> Result<ManifestEntry> {
        let source_id = stem(src);
        let id = format!("{source_id}_spoof");
        let (w, tilt, report) = make_spoof(&read_wav(src)?, cfg, &id)?;
        if report.clipped_fraction > 0.0 {
            warn!("{id}: {:.4}% of samples clipped", 100.0 * report.clipped_fraction);
        }
        log::debug!("{id}: tilt {tilt:.4}");
        let path = spoof_dir.join(format!("{id}.wav"));
        write_wav_pcm16(&path, &w)?;
        Ok(ManifestEntry {
            id,
            path,
            label: Label::Spoof,
            split: Split::Train,
            source_id,
        })
    });
    let mut spoofs = spoofs.into_iter().collect::<Result<Vec<_>>>()?;
    let mut bona: Vec<ManifestEntry> = files
        .iter()
        .map(|p| ManifestEntry {
            id: stem(p),
            path: p.clone(),
            label: Label::Bonafide,
            split: Split::Train,
            source_id: stem(p),
        })
        .collect();

    let mut r = rng::stream(cfg.seed, "split", "");
    for class in [&mut bona, &mut spoofs] {
        let mut order: Vec<usize> = (0..class.len()).collect();
        order.shuffle(&mut r);
        for &i in &order[..counts.dev_per_class()] {
            class[i].split = Split::Dev;
        }
    }

    let mut entries: Vec<ManifestEntry> = bona.into_iter().chain(spoofs).collect();
    entries.sort_by(|a, b| (a.split, a.label, &a.id).cmp(&(b.split, b.label, &b.id)));
    Ok(DatasetManifest {
        entries,
        seed: cfg.seed,
    })
}
