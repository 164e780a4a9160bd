use std::f64::consts::PI;

use crate::dsp::Waveform;
use crate::error::{Error, Result};

/// Zero crossings of the sinc kernel kept on each side.
const SINC_ZEROS: f64 = 16.0;
/// Passband edge as a fraction of the lower Nyquist frequency.
const ROLLOFF: f64 = 0.94;

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Rational-ratio polyphase resampling with a Hann-windowed sinc low-pass.
///
/// Output sample `n` sits at input time `n * down / up`; its fractional offset
/// takes one of `up` values, so the filter is tabulated once per phase.
/// Inputs already at `target_rate` are returned unchanged.
pub fn resample(w: &Waveform, target_rate: u32) -> Result<Waveform> {
    if target_rate == 0 {
        return Err(Error::invalid("target_rate", "must be positive"));
    }
    if w.sample_rate() == target_rate {
        return Ok(w.clone());
    }
    let g = gcd(w.sample_rate() as u64, target_rate as u64);
    let up = target_rate as u64 / g;
    let down = w.sample_rate() as u64 / g;

    let cutoff = (up as f64 / down as f64).min(1.0) * ROLLOFF;
    let half = (SINC_ZEROS / cutoff).ceil() as i64;
    let taps = (2 * half) as usize;

    // table[phase][j] weights input sample base + j - half + 1
    let table: Vec<Vec<f64>> = (0..up)
        .map(|phase| {
            let frac = phase as f64 / up as f64;
            let mut row: Vec<f64> = (0..taps)
                .map(|j| {
                    let t = frac - (j as i64 - half + 1) as f64;
                    let win = if t.abs() < half as f64 {
                        0.5 * (1.0 + (PI * t / half as f64).cos())
                    } else {
                        0.0
                    };
                    cutoff * sinc(cutoff * t) * win
                })
                .collect();
            let sum: f64 = row.iter().sum();
            row.iter_mut().for_each(|v| *v /= sum);
            row
        })
        .collect();

    let x = w.samples();
    let n_in = x.len() as u64;
    let n_out = (n_in * up).div_ceil(down) as usize;
    let out: Vec<f64> = (0..n_out as u64)
        .map(|n| {
            let pos = n * down;
            let base = (pos / up) as i64;
            let phase = (pos % up) as usize;
            table[phase]
                .iter()
                .enumerate()
                .map(|(j, h)| {
                    let k = base + j as i64 - half + 1;
                    if k >= 0 && (k as u64) < n_in {
                        h * x[k as usize]
                    } else {
                        0.0
                    }
                })
                .sum()
        })
        .collect();
    Waveform::new(out, target_rate)
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-12 {
        1.0
    } else {
        (PI * x).sin() / (PI * x)
    }
}
