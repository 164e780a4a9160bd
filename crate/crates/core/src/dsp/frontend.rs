use std::f64::consts::PI;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use ndarray::{Array2, Axis};
use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::dsp::{resample, Waveform};
use crate::error::{Error, Result};
use crate::EPSILON;

/// Front-end parameters. Defaults: 16 kHz, 25 ms Hann / 10 ms hop, 1024-point
/// FFT, 64 HTK mel bands over 0–8 kHz.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FrontEndConfig {
    pub sample_rate: u32,
    pub win_ms: f64,
    pub hop_ms: f64,
    pub fft_size: usize,
    pub n_mels: usize,
    pub f_low: f64,
    pub f_high: f64,
}

impl Default for FrontEndConfig {
    fn default() -> Self {
        Self {
            sample_rate: 16_000,
            win_ms: 25.0,
            hop_ms: 10.0,
            fft_size: 1024,
            n_mels: 64,
            f_low: 0.0,
            f_high: 8000.0,
        }
    }
}

impl FrontEndConfig {
    pub fn win_len(&self) -> usize {
        ms_to_samples(self.win_ms, self.sample_rate)
    }

    pub fn hop_len(&self) -> usize {
        ms_to_samples(self.hop_ms, self.sample_rate)
    }
}

fn ms_to_samples(ms: f64, rate: u32) -> usize {
    (ms * rate as f64 / 1000.0).round() as usize
}

/// Periodic Hann window, `0.5 (1 - cos(2πn/L))`.
pub fn hann_window(len: usize) -> Vec<f64> {
    (0..len)
        .map(|n| 0.5 * (1.0 - (2.0 * PI * n as f64 / len as f64).cos()))
        .collect()
}

/// Short-time Fourier transform keeping the `fft_size / 2 + 1` non-negative
/// frequency bins. Frames start every hop; a trailing partial frame is dropped.
pub fn stft(w: &Waveform, win_ms: f64, hop_ms: f64, fft_size: usize) -> Result<Array2<Complex64>> {
    let win_len = ms_to_samples(win_ms, w.sample_rate());
    let hop_len = ms_to_samples(hop_ms, w.sample_rate());
    if win_len == 0 || hop_len == 0 {
        return Err(Error::invalid("win_ms/hop_ms", "window and hop must span at least one sample"));
    }
    if fft_size < win_len {
        return Err(Error::invalid(
            "fft_size",
            format!("{fft_size} is shorter than the {win_len}-sample window"),
        ));
    }
    let x = w.samples();
    if x.len() < win_len {
        return Err(Error::TooShort {
            len: x.len(),
            needed: win_len,
        });
    }

    let n_frames = (x.len() - win_len) / hop_len + 1;
    let n_bins = fft_size / 2 + 1;
    let window = hann_window(win_len);
    let fft = FftPlanner::<f64>::new().plan_fft_forward(fft_size);

    let mut out = Array2::<Complex64>::zeros((n_frames, n_bins));
    let mut buf = vec![Complex64::new(0.0, 0.0); fft_size];
    for (t, mut row) in out.axis_iter_mut(Axis(0)).enumerate() {
        let frame = &x[t * hop_len..t * hop_len + win_len];
        for (b, (s, wv)) in buf.iter_mut().zip(frame.iter().zip(&window)) {
            *b = Complex64::new(s * wv, 0.0);
        }
        buf[win_len..].fill(Complex64::new(0.0, 0.0));
        fft.process(&mut buf);
        row.iter_mut().zip(&buf).for_each(|(o, v)| *o = *v);
    }
    Ok(out)
}

pub fn hz_to_mel(hz: f64) -> f64 {
    2595.0 * (1.0 + hz / 700.0).log10()
}

pub fn mel_to_hz(mel: f64) -> f64 {
    700.0 * (10f64.powf(mel / 2595.0) - 1.0)
}

/// Triangular filters on the HTK mel scale with unnormalized unit peaks.
#[derive(Debug, Clone)]
pub struct MelFilterbank {
    weights: Array2<f64>,
    /// `n_mels + 2` edge frequencies in Hz; filter m spans edges m..m+2.
    edges_hz: Vec<f64>,
    fft_size: usize,
    sample_rate: u32,
}

impl MelFilterbank {
    pub fn new(n_mels: usize, fft_size: usize, sample_rate: u32, f_low: f64, f_high: f64) -> Result<Self> {
        if n_mels == 0 {
            return Err(Error::invalid("n_mels", "must be at least 1"));
        }
        if fft_size < 2 {
            return Err(Error::invalid("fft_size", "must be at least 2"));
        }
        let nyquist = sample_rate as f64 / 2.0;
        if !(f_low >= 0.0 && f_low < f_high && f_high <= nyquist) {
            return Err(Error::invalid(
                "f_low/f_high",
                format!("need 0 <= f_low < f_high <= {nyquist}, got {f_low}..{f_high}"),
            ));
        }

        let (m_lo, m_hi) = (hz_to_mel(f_low), hz_to_mel(f_high));
        let edges_hz: Vec<f64> = (0..n_mels + 2)
            .map(|i| mel_to_hz(m_lo + (m_hi - m_lo) * i as f64 / (n_mels + 1) as f64))
            .collect();

        let n_bins = fft_size / 2 + 1;
        let bin_hz = sample_rate as f64 / fft_size as f64;
        let mut fb = Self {
            weights: Array2::zeros((n_mels, n_bins)),
            edges_hz,
            fft_size,
            sample_rate,
        };
        for m in 0..n_mels {
            for k in 0..n_bins {
                fb.weights[[m, k]] = fb.weight_at(m, k as f64 * bin_hz);
            }
            if fb.weights.row(m).iter().all(|&v| v <= 0.0) {
                return Err(Error::invalid(
                    "fft_size",
                    format!("mel filter {m} covers no FFT bin; use more bins or fewer mels"),
                ));
            }
        }
        Ok(fb)
    }

    pub fn from_config(cfg: &FrontEndConfig) -> Result<Self> {
        Self::new(cfg.n_mels, cfg.fft_size, cfg.sample_rate, cfg.f_low, cfg.f_high)
    }

    /// Continuous response of filter `m` at `hz`.
    pub fn weight_at(&self, m: usize, hz: f64) -> f64 {
        let (l, c, r) = (self.edges_hz[m], self.edges_hz[m + 1], self.edges_hz[m + 2]);
        let rise = (hz - l) / (c - l);
        let fall = (r - hz) / (r - c);
        rise.min(fall).max(0.0)
    }

    /// `n_mels x (fft_size/2 + 1)` weight matrix.
    pub fn weights(&self) -> &Array2<f64> {
        &self.weights
    }

    pub fn n_mels(&self) -> usize {
        self.weights.nrows()
    }

    pub fn n_bins(&self) -> usize {
        self.weights.ncols()
    }

    pub fn fft_size(&self) -> usize {
        self.fft_size
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn center_hz(&self) -> Vec<f64> {
        self.edges_hz[1..self.edges_hz.len() - 1].to_vec()
    }
}

/// `E(f, τ) = Σ_k |X(k, τ)|² H_f(k)`; output is frames × mels.
pub fn mel_energies(stft: &Array2<Complex64>, fb: &MelFilterbank) -> Result<Array2<f64>> {
    if stft.ncols() != fb.n_bins() {
        return Err(Error::DimensionMismatch {
            what: "STFT bins vs filterbank bins",
            expected: fb.n_bins(),
            got: stft.ncols(),
        });
    }
    let power = stft.mapv(|c| c.norm_sqr());
    Ok(power.dot(&fb.weights().t()))
}

/// Standardized log-mel spectrogram, frames × mel bands.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrogram {
    values: Array2<f64>,
}

impl Spectrogram {
    pub fn from_values(values: Array2<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("spectrogram", "contains non-finite entries"));
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn n_frames(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_mels(&self) -> usize {
        self.values.ncols()
    }

    /// Write one CSV row per frame, plus a JSON sidecar with the front-end
    /// settings next to it (`<path>.json`).
    pub fn write_csv(&self, path: impl AsRef<Path>, cfg: &FrontEndConfig) -> Result<()> {
        let path = path.as_ref();
        let io = |e| Error::io(path, e);
        let mut out = BufWriter::new(File::create(path).map_err(io)?);
        for row in self.values.rows() {
            let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            writeln!(out, "{}", line.join(",")).map_err(io)?;
        }
        out.flush().map_err(io)?;

        let sidecar = serde_json::json!({
            "sample_rate": cfg.sample_rate,
            "n_mels": self.n_mels(),
            "n_frames": self.n_frames(),
            "win_ms": cfg.win_ms,
            "hop_ms": cfg.hop_ms,
            "fft_size": cfg.fft_size,
            "f_low": cfg.f_low,
            "f_high": cfg.f_high,
            "epsilon": EPSILON,
        });
        let side_path = path.with_extension("json");
        let text = serde_json::to_string_pretty(&sidecar).expect("static json");
        std::fs::write(&side_path, text).map_err(|e| Error::io(&side_path, e))
    }
}

/// `M = ln(E + ε)`, then `(M - μ) / (σ + ε)` over every entry.
pub fn log_standardize(energies: &Array2<f64>) -> Result<Spectrogram> {
    if energies.is_empty() {
        return Err(Error::invalid("energies", "empty matrix"));
    }
    if let Some(v) = energies.iter().find(|v| v.is_nan() || **v < 0.0) {
        return Err(Error::invalid("energies", format!("negative or NaN energy {v}")));
    }
    let m = energies.mapv(|e| (e + EPSILON).ln());
    let n = m.len() as f64;
    let mean = m.sum() / n;
    let std = (m.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
    Spectrogram::from_values(m.mapv(|v| (v - mean) / (std + EPSILON)))
}

/// Waveform to standardized log-mel, with the filterbank built once.
#[derive(Debug, Clone)]
pub struct FrontEnd {
    cfg: FrontEndConfig,
    filterbank: MelFilterbank,
}

impl FrontEnd {
    pub fn new(cfg: FrontEndConfig) -> Result<Self> {
        let filterbank = MelFilterbank::from_config(&cfg)?;
        Ok(Self { cfg, filterbank })
    }

    pub fn config(&self) -> &FrontEndConfig {
        &self.cfg
    }

    pub fn filterbank(&self) -> &MelFilterbank {
        &self.filterbank
    }

    pub fn process(&self, w: &Waveform) -> Result<Spectrogram> {
        let w = resample(w, self.cfg.sample_rate)?;
        let x = stft(&w, self.cfg.win_ms, self.cfg.hop_ms, self.cfg.fft_size)?;
        let e = mel_energies(&x, &self.filterbank)?;
        log_standardize(&e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn sine(freq: f64, secs: f64) -> Waveform {
        let n = (16000.0 * secs) as usize;
        Waveform::new(
            (0..n).map(|i| (2.0 * PI * freq * i as f64 / 16000.0).sin()).collect(),
            16000,
        )
        .unwrap()
    }

    #[test]
    fn one_second_gives_98_frames() {
        let x = stft(&sine(440.0, 1.0), 25.0, 10.0, 1024).unwrap();
        assert_eq!(x.dim(), (98, 513));
    }

    #[test]
    fn zero_signal_zero_stft() {
        let w = Waveform::new(vec![0.0; 16000], 16000).unwrap();
        let x = stft(&w, 25.0, 10.0, 1024).unwrap();
        assert!(x.iter().all(|c| c.norm() == 0.0));
    }

    #[test]
    fn too_short_signal() {
        let w = Waveform::new(vec![0.1; 399], 16000).unwrap();
        assert!(matches!(
            stft(&w, 25.0, 10.0, 1024),
            Err(Error::TooShort { len: 399, needed: 400 })
        ));
    }

    #[test]
    fn fft_smaller_than_window_rejected() {
        assert!(stft(&sine(100.0, 0.1), 25.0, 10.0, 256).is_err());
    }

    #[test]
    fn periodic_hann() {
        let w = hann_window(400);
        assert_eq!(w[0], 0.0);
        assert!((w[200] - 1.0).abs() < 1e-15);
        // periodic form: w[L-n] == w[n]
        assert!((w[1] - w[399]).abs() < 1e-15);
    }

    #[test]
    fn single_filter_peaks_mid_band() {
        let fb = MelFilterbank::new(1, 1024, 16000, 0.0, 8000.0).unwrap();
        let mid_hz = mel_to_hz(hz_to_mel(8000.0) / 2.0);
        assert!((fb.center_hz()[0] - mid_hz).abs() < 1e-9);
        let row = fb.weights().row(0);
        let peak = row
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .unwrap()
            .0;
        assert!((peak as f64 * 16000.0 / 1024.0 - mid_hz).abs() <= 16000.0 / 1024.0);
    }

    #[test]
    fn filters_vanish_two_centers_away() {
        let fb = MelFilterbank::new(64, 1024, 16000, 0.0, 8000.0).unwrap();
        let centers = fb.center_hz();
        for (m, &c) in centers.iter().enumerate().take(62).skip(2) {
            assert_eq!(fb.weight_at(m - 2, c), 0.0);
            assert_eq!(fb.weight_at(m + 2, c), 0.0);
            assert!((fb.weight_at(m, c) - 1.0).abs() < 1e-12);
        }
        assert!(centers.windows(2).all(|p| p[0] < p[1]));
    }

    #[test]
    fn filter_rows_nonnegative_unimodal() {
        let fb = MelFilterbank::new(64, 1024, 16000, 0.0, 8000.0).unwrap();
        for row in fb.weights().rows() {
            assert!(row.iter().all(|&v| v >= 0.0));
            assert!(row.iter().any(|&v| v > 0.0));
            let peak = row
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.total_cmp(b.1))
                .unwrap()
                .0;
            let r = row.as_slice().unwrap();
            assert!(r[..=peak].windows(2).all(|p| p[0] <= p[1]));
            assert!(r[peak..].windows(2).all(|p| p[0] >= p[1]));
        }
    }

    #[test]
    fn invalid_band_edges() {
        assert!(MelFilterbank::new(64, 1024, 16000, 100.0, 100.0).is_err());
        assert!(MelFilterbank::new(64, 1024, 16000, -1.0, 8000.0).is_err());
        assert!(MelFilterbank::new(64, 1024, 16000, 0.0, 9000.0).is_err());
        // too many filters for the bin resolution
        assert!(MelFilterbank::new(512, 64, 16000, 0.0, 8000.0).is_err());
    }

    #[test]
    fn mel_energy_dimension_mismatch() {
        let fb = MelFilterbank::new(64, 1024, 16000, 0.0, 8000.0).unwrap();
        let x = Array2::<Complex64>::zeros((2, 257));
        assert!(matches!(
            mel_energies(&x, &fb),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn impulse_spectrum_selects_filter_column() {
        let fb = MelFilterbank::new(64, 1024, 16000, 0.0, 8000.0).unwrap();
        let mut x = Array2::<Complex64>::zeros((1, 513));
        x[[0, 100]] = Complex64::new(0.6, 0.8);
        let e = mel_energies(&x, &fb).unwrap();
        for m in 0..64 {
            assert!((e[[0, m]] - fb.weights()[[m, 100]]).abs() < 1e-15);
        }
    }

    #[test]
    fn log_standardize_hand_case() {
        let e1 = 1f64.exp() - EPSILON;
        let e3 = 3f64.exp() - EPSILON;
        let s = log_standardize(&array![[e1, e3], [e1, e3]]).unwrap();
        let expect = array![[-1.0, 1.0], [-1.0, 1.0]];
        for (a, b) in s.values().iter().zip(expect.iter()) {
            assert!((a - b).abs() < 1e-7, "{a} vs {b}");
        }
    }

    #[test]
    fn constant_energies_standardize_to_zero() {
        let s = log_standardize(&Array2::from_elem((5, 64), 3.5)).unwrap();
        assert!(s.values().iter().all(|&v| v.abs() < 1e-6));
    }

    #[test]
    fn negative_energy_rejected() {
        assert!(log_standardize(&array![[1.0, -1.0]]).is_err());
    }
}
