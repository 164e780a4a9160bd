//! Seeded stand-in speech: voiced harmonic syllables with vibrato, formant
//! shaping and amplitude envelopes, separated by near-silent gaps.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use rand::Rng;

use crate::dsp::{write_wav_pcm16, Waveform};
use crate::error::{Error, Result};
use crate::rng;

pub const SYNTH_RATE: u32 = 16_000;

fn formant_gain(freq: f64, formants: &[(f64, f64)]) -> f64 {
    formants
        .iter()
        .map(|&(center, width)| (-0.5 * ((freq - center) / width).powi(2)).exp())
        .sum::<f64>()
        + 0.05
}

/// One utterance, 1.2–2.0 s at 16 kHz, fully determined by `(seed, index)`.
pub fn synthetic_utterance(seed: u64, index: usize) -> Waveform {
    let mut r = rng::stream(seed, "synthetic-audio", &index.to_string());
    let rate = SYNTH_RATE as f64;
    let n = (rate * r.random_range(1.2..2.0)) as usize;
    let mut x = vec![0.0; n];

    let speaker_f0 = r.random_range(95.0..210.0);
    let n_syll = r.random_range(2..=4);
    let slot = n / n_syll;
    for s in 0..n_syll {
        let len = (slot as f64 * r.random_range(0.55..0.85)) as usize;
        let start = s * slot + r.random_range(0..=(slot - len) / 2);
        let f0 = speaker_f0 * r.random_range(0.85..1.15);
        let glide = r.random_range(-0.15..0.15);
        let vib_rate = r.random_range(4.0..7.0);
        let vib_depth = r.random_range(0.01..0.03);
        let formants = [
            (r.random_range(300.0..900.0), r.random_range(80.0..200.0)),
            (r.random_range(900.0..2400.0), r.random_range(120.0..300.0)),
            (r.random_range(2400.0..3600.0), r.random_range(200.0..400.0)),
        ];
        let max_h = (3800.0 / f0) as usize;
        let gains: Vec<f64> = (1..=max_h)
            .map(|h| formant_gain(h as f64 * f0, &formants) / (h as f64).sqrt())
            .collect();
        let phases: Vec<f64> = (0..max_h).map(|_| r.random_range(0.0..2.0 * PI)).collect();

        let mut phase = 0.0;
        for i in 0..len {
            let t = i as f64 / rate;
            let u = i as f64 / len as f64;
            let inst_f0 = f0 * (1.0 + glide * u) * (1.0 + vib_depth * (2.0 * PI * vib_rate * t).sin());
            phase += 2.0 * PI * inst_f0 / rate;
            // raised-cosine attack/decay, flat middle
            let env = if u < 0.15 {
                0.5 * (1.0 - (PI * u / 0.15).cos())
            } else if u > 0.8 {
                0.5 * (1.0 + (PI * (u - 0.8) / 0.2).cos())
            } else {
                1.0
            };
            let v: f64 = gains
                .iter()
                .zip(&phases)
                .enumerate()
                .map(|(h, (g, p))| g * ((h + 1) as f64 * phase + p).sin())
                .sum();
            if let Some(slot) = x.get_mut(start + i) {
                *slot += env * v;
            }
        }
    }

    let peak = x.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-12);
    let target = r.random_range(0.4..0.8);
    // faint room tone well below the speech level
    let floor = target * 10f64.powf(-r.random_range(55.0..65.0) / 20.0);
    for v in x.iter_mut() {
        *v = *v / peak * target + floor * (r.random::<f64>() * 2.0 - 1.0);
    }
    Waveform::new(x, SYNTH_RATE).expect("synthetic audio is finite and non-empty")
}

/// Write `count` utterances as `utt_000.wav`, `utt_001.wav`, … into `dir`.
pub fn write_synthetic_corpus(dir: &Path, count: usize, seed: u64) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    (0..count)
        .map(|i| {
            let path = dir.join(format!("utt_{i:03}.wav"));
            write_wav_pcm16(&path, &synthetic_utterance(seed, i))?;
            Ok(path)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_varied() {
        let a = synthetic_utterance(3, 0);
        assert_eq!(a, synthetic_utterance(3, 0));
        assert_ne!(a, synthetic_utterance(3, 1));
        assert_ne!(a, synthetic_utterance(4, 0));
        assert!(a.duration_secs() >= 1.2 && a.duration_secs() < 2.0);
        assert!(a.samples().iter().all(|v| v.abs() <= 0.81));
        assert!(a.power() > 0.0);
    }
}
