//! Moving-mean detrending and zero-phase Butterworth band separation.

use crate::dsp::{DspError, PipelineConfig};

/// Centered moving mean with mirrored edges, so the effective window length
/// (and therefore the gain) is the same at every position. A constant input
/// maps to itself exactly.
pub fn moving_mean(x: &[f64], window_samples: usize) -> Vec<f64> {
    let n = x.len();
    if n == 0 {
        return Vec::new();
    }
    let w = window_samples.max(1).min(2 * n - 1) | 1;
    let half = w / 2;
    // Mirror across the edges (without repeating the edge sample), then a
    // prefix sum gives every window in O(1).
    let mirrored = |i: isize| -> f64 {
        let n = n as isize;
        let j = if i < 0 { -i } else if i >= n { 2 * n - 2 - i } else { i };
        x[j as usize]
    };
    let mut prefix = Vec::with_capacity(n + w);
    prefix.push(0.0);
    for i in -(half as isize)..(n + half) as isize {
        prefix.push(prefix.last().unwrap() + mirrored(i));
    }
    (0..n).map(|i| (prefix[i + w] - prefix[i]) / w as f64).collect()
}

/// Subtract the centered moving mean, converting `window_secs` to samples.
pub fn subtract_moving_mean(x: &[f64], window_secs: f64, fs: f64) -> Vec<f64> {
    let mean = moving_mean(x, window_samples(window_secs, fs));
    x.iter().zip(mean).map(|(v, m)| v - m).collect()
}

/// Odd sample count covering `secs` at rate `fs`, for a symmetric window.
pub fn window_samples(secs: f64, fs: f64) -> usize {
    let w = (secs * fs).round() as usize;
    w.max(1) | 1
}

/// Second-order section with normalized a0 = 1.
#[derive(Debug, Clone, Copy)]
pub struct Biquad {
    b0: f64,
    b1: f64,
    b2: f64,
    a1: f64,
    a2: f64,
}

impl Biquad {
    /// Butterworth low-pass (Q = 1/sqrt(2)).
    pub fn low_pass(cutoff_hz: f64, fs: f64) -> Self {
        let (cos, alpha) = prewarp(cutoff_hz, fs);
        let a0 = 1.0 + alpha;
        Self {
            b0: (1.0 - cos) / 2.0 / a0,
            b1: (1.0 - cos) / a0,
            b2: (1.0 - cos) / 2.0 / a0,
            a1: -2.0 * cos / a0,
            a2: (1.0 - alpha) / a0,
        }
    }

    /// Butterworth high-pass (Q = 1/sqrt(2)).
    pub fn high_pass(cutoff_hz: f64, fs: f64) -> Self {
        let (cos, alpha) = prewarp(cutoff_hz, fs);
        let a0 = 1.0 + alpha;
        Self {
            b0: (1.0 + cos) / 2.0 / a0,
            b1: -(1.0 + cos) / a0,
            b2: (1.0 + cos) / 2.0 / a0,
            a1: -2.0 * cos / a0,
            a2: (1.0 - alpha) / a0,
        }
    }

    /// Causal direct-form-II-transposed run over `x` from zero state.
    pub fn filter(&self, x: &[f64]) -> Vec<f64> {
        let mut s1 = 0.0;
        let mut s2 = 0.0;
        x.iter()
            .map(|&v| {
                let y = self.b0 * v + s1;
                s1 = self.b1 * v - self.a1 * y + s2;
                s2 = self.b2 * v - self.a2 * y;
                y
            })
            .collect()
    }
}

fn prewarp(cutoff_hz: f64, fs: f64) -> (f64, f64) {
    let omega = 2.0 * std::f64::consts::PI * cutoff_hz / fs;
    let q = std::f64::consts::FRAC_1_SQRT_2;
    (omega.cos(), omega.sin() / (2.0 * q))
}

/// Forward-backward application of `bq`, giving zero phase in the passband.
///
/// The series is extended at both ends by odd reflection so the filter state
/// settles before it reaches real data; `pad` is clamped to the series length.
pub fn filtfilt(bq: &Biquad, x: &[f64], pad: usize) -> Vec<f64> {
    let n = x.len();
    if n < 2 {
        return x.to_vec();
    }
    let pad = pad.min(n - 1);
    let mut ext = Vec::with_capacity(n + 2 * pad);
    for i in (1..=pad).rev() {
        ext.push(2.0 * x[0] - x[i]);
    }
    ext.extend_from_slice(x);
    for i in (1..=pad).rev() {
        ext.push(2.0 * x[n - 1] - x[n - 1 - i]);
    }

    let mut y = bq.filter(&ext);
    y.reverse();
    let mut y = bq.filter(&y);
    y.reverse();
    y[pad..pad + n].to_vec()
}

fn settle_pad(cutoff_hz: f64, fs: f64) -> usize {
    ((3.0 * fs / cutoff_hz).ceil() as usize).max(8)
}

/// Zero-phase Butterworth low-pass.
pub fn low_pass_zero_phase(x: &[f64], fs: f64, cutoff_hz: f64) -> Vec<f64> {
    filtfilt(&Biquad::low_pass(cutoff_hz, fs), x, settle_pad(cutoff_hz, fs))
}

/// Zero-phase Butterworth band-pass as a high-pass/low-pass cascade.
///
/// The high-pass side runs twice: the heart component sits orders of
/// magnitude below the respiration displacement, so the low edge needs the
/// steeper rolloff.
pub fn band_pass_zero_phase(x: &[f64], fs: f64, low_hz: f64, high_hz: f64) -> Vec<f64> {
    let hp_pad = settle_pad(low_hz, fs);
    let hp_stage = Biquad::high_pass(low_hz, fs);
    let hp = filtfilt(&hp_stage, x, hp_pad);
    let hp = filtfilt(&hp_stage, &hp, hp_pad);
    filtfilt(&Biquad::low_pass(high_hz, fs), &hp, settle_pad(high_hz, fs))
}

/// Split a displacement series into its respiration band (low-pass at
/// `resp_cutoff`) and heart band (band-pass over `heart_band`).
pub fn separate_bands(
    d: &[f64],
    fs: f64,
    cfg: &PipelineConfig,
) -> Result<(Vec<f64>, Vec<f64>), DspError> {
    cfg.validate()?;
    if !(fs > 0.0) {
        return Err(DspError::InvalidParameter {
            name: "fs",
            reason: format!("must be > 0, got {fs}"),
        });
    }
    let memory = filter_memory_samples(fs, cfg);
    if d.len() < 4 * memory {
        return Err(DspError::InsufficientData { needed: 4 * memory, got: d.len() });
    }
    let resp = low_pass_zero_phase(d, fs, cfg.resp_cutoff);
    let heart = band_pass_zero_phase(d, fs, cfg.heart_band.0, cfg.heart_band.1);
    Ok((resp, heart))
}

/// Longest filter memory in samples: the settle time of the slowest cutoff.
pub fn filter_memory_samples(fs: f64, cfg: &PipelineConfig) -> usize {
    let slowest = cfg.resp_cutoff.min(cfg.heart_band.0);
    ((fs / slowest).ceil() as usize).max(1)
}
