//! Inverse chain from raw tri-axial samples to per-window vitals: magnitude,
//! gravity removal, double integration back to displacement, band
//! separation, event detection and windowed counting.

pub mod filters;
pub mod peaks;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scenario::AccelSample;

pub use filters::{band_pass_zero_phase, low_pass_zero_phase, separate_bands};
pub use peaks::{detect_cough, detect_peaks};

#[derive(Debug, Error)]
pub enum DspError {
    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("insufficient data: need {needed} samples, got {got}")]
    InsufficientData { needed: usize, got: usize },
    #[error("non-finite sample at index {index}")]
    NonFiniteSample { index: usize },
    #[error("non-uniform sampling at index {index}: spacing {got} s, expected {expected} s")]
    NonUniformSampling { index: usize, got: f64, expected: f64 },
    #[error("config parse error: {0}")]
    Parse(#[from] toml::de::Error),
}

fn default_gravity_window() -> f64 {
    2.0
}

fn default_detrend_window() -> f64 {
    1.0
}

fn default_resp_cutoff() -> f64 {
    0.7
}

fn default_heart_band() -> (f64, f64) {
    (0.7, 10.0)
}

fn default_heart_refractory() -> f64 {
    0.25
}

fn default_resp_refractory() -> f64 {
    1.5
}

fn default_peak_threshold_k() -> f64 {
    4.0
}

fn default_resp_threshold_k() -> f64 {
    1.0
}

fn default_cough_threshold_k() -> f64 {
    10.0
}

fn default_cough_min_separation() -> f64 {
    0.5
}

fn default_window() -> f64 {
    7.2
}

/// Tunable parameters of the vitals pipeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    /// Moving-mean length for gravity/DC removal, seconds.
    #[serde(default = "default_gravity_window")]
    pub gravity_window: f64,
    /// Moving-mean length subtracted after each integration stage, seconds;
    /// 0 disables the detrend.
    #[serde(default = "default_detrend_window")]
    pub integration_detrend_window: f64,
    /// Low-pass boundary of the respiration band, Hz.
    #[serde(default = "default_resp_cutoff")]
    pub resp_cutoff: f64,
    /// (low, high) band of the heart component, Hz.
    #[serde(default = "default_heart_band")]
    pub heart_band: (f64, f64),
    /// Minimum spacing between detected beats, seconds.
    #[serde(default = "default_heart_refractory")]
    pub heart_refractory: f64,
    /// Minimum spacing between detected breaths, seconds.
    #[serde(default = "default_resp_refractory")]
    pub resp_refractory: f64,
    /// MAD multiplier for beat acceptance in the heart band.
    #[serde(default = "default_peak_threshold_k")]
    pub peak_threshold_k: f64,
    /// MAD multiplier for breath acceptance in the respiration band. The
    /// respiration band is a near-sinusoid whose MAD is a large fraction of
    /// its amplitude, so this runs much lower than `peak_threshold_k`.
    #[serde(default = "default_resp_threshold_k")]
    pub resp_threshold_k: f64,
    #[serde(default = "default_cough_threshold_k")]
    pub cough_threshold_k: f64,
    /// Minimum spacing between detected coughs, seconds.
    #[serde(default = "default_cough_min_separation")]
    pub cough_min_separation: f64,
    /// Vitals counting window, seconds.
    #[serde(default = "default_window")]
    pub window: f64,
    /// Window advance, seconds; defaults to the window length.
    #[serde(default)]
    pub hop: Option<f64>,
    /// Span excluded from event detection at each series edge, seconds;
    /// defaults to half the detrend window.
    #[serde(default)]
    pub edge_margin: Option<f64>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            gravity_window: default_gravity_window(),
            integration_detrend_window: default_detrend_window(),
            resp_cutoff: default_resp_cutoff(),
            heart_band: default_heart_band(),
            heart_refractory: default_heart_refractory(),
            resp_refractory: default_resp_refractory(),
            peak_threshold_k: default_peak_threshold_k(),
            resp_threshold_k: default_resp_threshold_k(),
            cough_threshold_k: default_cough_threshold_k(),
            cough_min_separation: default_cough_min_separation(),
            window: default_window(),
            hop: None,
            edge_margin: None,
        }
    }
}

impl PipelineConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, DspError> {
        let cfg: Self = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Effective hop: configured value or the window length.
    pub fn hop(&self) -> f64 {
        self.hop.unwrap_or(self.window)
    }

    /// Span excluded from event detection at each series edge, where the
    /// truncated detrend window and filter settling distort the signal.
    pub fn edge_margin(&self) -> f64 {
        self.edge_margin.unwrap_or(self.integration_detrend_window / 2.0)
    }

    pub fn validate(&self) -> Result<(), DspError> {
        let fail = |name: &'static str, reason: String| -> Result<(), DspError> {
            Err(DspError::InvalidParameter { name, reason })
        };
        for (name, v) in [
            ("gravity_window", self.gravity_window),
            ("resp_cutoff", self.resp_cutoff),
            ("heart_refractory", self.heart_refractory),
            ("resp_refractory", self.resp_refractory),
            ("peak_threshold_k", self.peak_threshold_k),
            ("resp_threshold_k", self.resp_threshold_k),
            ("cough_threshold_k", self.cough_threshold_k),
            ("cough_min_separation", self.cough_min_separation),
            ("window", self.window),
        ] {
            if !(v > 0.0) {
                return fail(name, format!("must be > 0, got {v}"));
            }
        }
        if !(self.integration_detrend_window >= 0.0) {
            return fail(
                "integration_detrend_window",
                format!("must be >= 0 (0 disables), got {}", self.integration_detrend_window),
            );
        }
        if !(self.heart_band.0 < self.heart_band.1) {
            return fail(
                "heart_band",
                format!("low {} must be below high {}", self.heart_band.0, self.heart_band.1),
            );
        }
        if self.heart_band.0 < self.resp_cutoff {
            return fail(
                "heart_band",
                format!(
                    "low edge {} must be >= resp_cutoff {}",
                    self.heart_band.0, self.resp_cutoff
                ),
            );
        }
        let hop = self.hop();
        if !(hop > 0.0 && self.window >= hop) {
            return fail("hop", format!("need window >= hop > 0, got hop {hop}"));
        }
        Ok(())
    }
}

/// Health classification of the heart/respiration count ratio.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HrrStatus {
    HealthyRange,
    OutOfRange,
    Indeterminate,
}

/// Per-window vitals: raw counts, per-minute rates, the count ratio and the
/// sensor context in effect during the window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VitalsReport {
    pub window_start: f64,
    pub window_end: f64,
    pub hr_count: u32,
    pub rr_count: u32,
    pub hr_per_min: f64,
    pub rr_per_min: f64,
    /// `hr_count / rr_count`, undefined when no breaths were counted.
    #[serde(with = "hrr_serde")]
    pub hrr: Option<f64>,
    pub status: HrrStatus,
    pub skin_temp: Option<f64>,
    pub ambient_pressure: Option<f64>,
    pub altitude: Option<f64>,
}

/// Serializes the count ratio as a JSON number, or the literal string
/// "undefined" when no ratio exists.
pub mod hrr_serde {
    use serde::de::Error as _;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(value: &Option<f64>, ser: S) -> Result<S::Ok, S::Error> {
        match value {
            Some(v) => ser.serialize_f64(*v),
            None => ser.serialize_str("undefined"),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> Result<Option<f64>, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Number(f64),
            Text(String),
        }
        match Raw::deserialize(de)? {
            Raw::Number(v) => Ok(Some(v)),
            Raw::Text(s) if s == "undefined" => Ok(None),
            Raw::Text(s) => Err(D::Error::custom(format!("unexpected hrr value {s:?}"))),
        }
    }
}

/// Detected event times in seconds, each list strictly increasing.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DetectedEvents {
    pub beats: Vec<f64>,
    pub breaths: Vec<f64>,
    pub coughs: Vec<f64>,
}

/// Context channels averaged over one counting window.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct WindowContext {
    pub skin_temp: Option<f64>,
    pub pressure: Option<f64>,
}

/// Euclidean magnitude of one acceleration sample.
pub fn magnitude(sample: &AccelSample) -> Result<f64, DspError> {
    if !(sample.ax.is_finite() && sample.ay.is_finite() && sample.az.is_finite()) {
        return Err(DspError::NonFiniteSample { index: 0 });
    }
    Ok((sample.ax * sample.ax + sample.ay * sample.ay + sample.az * sample.az).sqrt())
}

/// Magnitude per sample minus a centered moving mean of `gravity_window`
/// seconds, leaving the dynamic component of the total acceleration.
pub fn remove_gravity(trace: &[AccelSample], cfg: &PipelineConfig) -> Result<Vec<f64>, DspError> {
    cfg.validate()?;
    let fs = trace_sample_rate(trace)?;
    let needed = (cfg.gravity_window * fs).round() as usize;
    if trace.len() < needed {
        return Err(DspError::InsufficientData { needed, got: trace.len() });
    }
    let mut mags = Vec::with_capacity(trace.len());
    for (index, sample) in trace.iter().enumerate() {
        mags.push(magnitude(sample).map_err(|_| DspError::NonFiniteSample { index })?);
    }
    Ok(filters::subtract_moving_mean(&mags, cfg.gravity_window, fs))
}

/// Double cumulative trapezoidal integration with moving-mean drift control
/// after each stage. Output length equals input length.
pub fn integrate_twice(a: &[f64], fs: f64, cfg: &PipelineConfig) -> Result<Vec<f64>, DspError> {
    if !(fs > 0.0) {
        return Err(DspError::InvalidParameter {
            name: "fs",
            reason: format!("must be > 0, got {fs}"),
        });
    }
    let stage = |x: &[f64]| -> Vec<f64> {
        let v = cumtrapz(x, 1.0 / fs);
        if cfg.integration_detrend_window > 0.0 {
            filters::subtract_moving_mean(&v, cfg.integration_detrend_window, fs)
        } else {
            v
        }
    };
    Ok(stage(&stage(a)))
}

fn cumtrapz(x: &[f64], dt: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(x.len());
    let mut acc = 0.0;
    out.push(0.0);
    for pair in x.windows(2) {
        acc += 0.5 * (pair[0] + pair[1]) * dt;
        out.push(acc);
    }
    out
}

/// Classify a heart/respiration count ratio; the healthy range is the closed
/// interval [3, 8].
pub fn classify_hrr(hrr: Option<f64>) -> HrrStatus {
    match hrr {
        None => HrrStatus::Indeterminate,
        Some(v) if v.is_nan() => HrrStatus::Indeterminate,
        Some(v) if (3.0..=8.0).contains(&v) => HrrStatus::HealthyRange,
        Some(_) => HrrStatus::OutOfRange,
    }
}

const SEA_LEVEL_PRESSURE_PA: f64 = 101_325.0;
const STANDARD_TEMPERATURE_K: f64 = 288.15;
const TEMPERATURE_LAPSE_K_PER_M: f64 = 0.0065;
const BAROMETRIC_EXPONENT: f64 = 0.190263;

/// International barometric formula: altitude in meters for a measured
/// pressure against a sea-level reference.
pub fn altitude_from_pressure(pressure: f64, sea_level_ref: f64) -> Result<f64, DspError> {
    if !(sea_level_ref > 0.0) {
        return Err(DspError::InvalidParameter {
            name: "sea_level_ref",
            reason: format!("must be > 0, got {sea_level_ref}"),
        });
    }
    if !(pressure > 0.0 && pressure <= sea_level_ref * 1.1) {
        return Err(DspError::InvalidParameter {
            name: "pressure",
            reason: format!("must be in (0, {}], got {pressure}", sea_level_ref * 1.1),
        });
    }
    let ratio = pressure / sea_level_ref;
    Ok((STANDARD_TEMPERATURE_K / TEMPERATURE_LAPSE_K_PER_M)
        * (1.0 - ratio.powf(BAROMETRIC_EXPONENT)))
}

/// Count events inside `[window_start, window_end)` and derive the ratio,
/// rates, status and context annotations.
pub fn count_vitals(
    events: &DetectedEvents,
    window_start: f64,
    window_end: f64,
    ctx: &WindowContext,
) -> Result<VitalsReport, DspError> {
    if !(window_end > window_start) {
        return Err(DspError::InvalidParameter {
            name: "window",
            reason: format!("window [{window_start}, {window_end}) is inverted or empty"),
        });
    }
    let in_window = |t: &&f64| **t >= window_start && **t < window_end;
    let hr_count = events.beats.iter().filter(in_window).count() as u32;
    let rr_count = events.breaths.iter().filter(in_window).count() as u32;
    let span = window_end - window_start;
    let hrr = (rr_count > 0).then(|| hr_count as f64 / rr_count as f64);
    let altitude = ctx
        .pressure
        .and_then(|p| altitude_from_pressure(p, SEA_LEVEL_PRESSURE_PA).ok());
    Ok(VitalsReport {
        window_start,
        window_end,
        hr_count,
        rr_count,
        hr_per_min: hr_count as f64 * 60.0 / span,
        rr_per_min: rr_count as f64 * 60.0 / span,
        hrr,
        status: classify_hrr(hrr),
        skin_temp: ctx.skin_temp,
        ambient_pressure: ctx.pressure,
        altitude,
    })
}

fn trace_sample_rate(trace: &[AccelSample]) -> Result<f64, DspError> {
    if trace.len() < 2 {
        return Err(DspError::InsufficientData { needed: 2, got: trace.len() });
    }
    let dt = trace[1].t - trace[0].t;
    if !(dt > 0.0) {
        return Err(DspError::NonUniformSampling { index: 1, got: dt, expected: f64::NAN });
    }
    for (i, pair) in trace.windows(2).enumerate() {
        let got = pair[1].t - pair[0].t;
        if (got - dt).abs() > 1e-9 {
            return Err(DspError::NonUniformSampling { index: i + 1, got, expected: dt });
        }
    }
    Ok(1.0 / dt)
}

/// Full chain over one uniformly sampled trace: returns the detected events
/// and one report per counting window, ordered by window start.
pub fn run_pipeline(
    trace: &[AccelSample],
    cfg: &PipelineConfig,
) -> Result<(DetectedEvents, Vec<VitalsReport>), DspError> {
    cfg.validate()?;
    let fs = trace_sample_rate(trace)?;
    let t0 = trace[0].t;
    let span = trace.last().unwrap().t - t0;
    let dt = 1.0 / fs;
    if span + dt + 1e-9 < cfg.window {
        let needed = (cfg.window * fs).round() as usize;
        return Err(DspError::InsufficientData { needed, got: trace.len() });
    }

    let dynamic = remove_gravity(trace, cfg)?;
    let displacement = integrate_twice(&dynamic, fs, cfg)?;
    let (resp, heart) = separate_bands(&displacement, fs, cfg)?;

    // The leading and trailing margin of each series carries filter-edge
    // artifacts; detection runs on the trimmed interior so the threshold
    // statistics stay clean too.
    let margin_samples = ((cfg.edge_margin() * fs).round() as usize).min(trace.len() / 2);
    let interior = margin_samples..trace.len() - margin_samples;
    let offset = t0 + margin_samples as f64 / fs;
    let detect = |series: &[f64], refractory: f64, k: f64| -> Vec<f64> {
        detect_peaks(&series[interior.clone()], fs, refractory, k)
            .into_iter()
            .map(|t| t + offset)
            .collect()
    };
    let events = DetectedEvents {
        beats: detect(&heart, cfg.heart_refractory, cfg.peak_threshold_k),
        breaths: detect(&resp, cfg.resp_refractory, cfg.resp_threshold_k),
        coughs: detect_cough(&dynamic[interior.clone()], fs, cfg)
            .into_iter()
            .map(|t| t + offset)
            .collect(),
    };

    let mut reports = Vec::new();
    let hop = cfg.hop();
    let mut j = 0usize;
    loop {
        let ws = t0 + j as f64 * hop;
        let we = ws + cfg.window;
        if we > t0 + span + dt + 1e-9 {
            break;
        }
        let ctx = window_context(trace, ws, we);
        reports.push(count_vitals(&events, ws, we, &ctx)?);
        j += 1;
    }
    Ok((events, reports))
}

/// Mean context channel values over the samples inside one window.
fn window_context(trace: &[AccelSample], ws: f64, we: f64) -> WindowContext {
    let mut temp_sum = 0.0;
    let mut temp_n = 0usize;
    let mut pres_sum = 0.0;
    let mut pres_n = 0usize;
    for sample in trace.iter().filter(|s| s.t >= ws && s.t < we) {
        if let Some(v) = sample.skin_temp {
            temp_sum += v;
            temp_n += 1;
        }
        if let Some(v) = sample.pressure {
            pres_sum += v;
            pres_n += 1;
        }
    }
    WindowContext {
        skin_temp: (temp_n > 0).then(|| temp_sum / temp_n as f64),
        pressure: (pres_n > 0).then(|| pres_sum / pres_n as f64),
    }
}
