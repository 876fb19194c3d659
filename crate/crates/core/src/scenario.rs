//! Scenario description and sample types shared by the simulator, the
//! vitals pipeline and the telemetry layer.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Standard gravity in m/s², added along the world vertical when a scenario
/// asks for it and used for the milli-g wire unit.
pub const STANDARD_GRAVITY: f64 = 9.80665;

/// Width in seconds of the transient injected for one cough event.
pub const COUGH_IMPULSE_WIDTH: f64 = 0.1;

/// Cough transient amplitude as a multiple of the heart impulse amplitude.
pub const COUGH_AMPLITUDE_FACTOR: f64 = 10.0;

#[derive(Debug, Error)]
pub enum ScenarioError {
    /// A scenario field violates its invariant; names the offending field.
    #[error("invalid scenario: {field}: {reason}")]
    Invalid { field: &'static str, reason: String },
    #[error("time {t} s outside scenario range [0, {duration}] s")]
    TimeOutOfRange { t: f64, duration: f64 },
    #[error("scenario parse error: {0}")]
    Parse(#[from] toml::de::Error),
}

/// Kind of a ground-truth or detected physiological event.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    HeartBeat,
    Breath,
    Cough,
    BreathHold,
}

/// One event on the scenario timeline. `duration` is zero for point events
/// (beats, breaths, coughs) and positive for breath-hold spans.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EventMark {
    pub kind: EventKind,
    pub start: f64,
    #[serde(default)]
    pub duration: f64,
}

impl EventMark {
    pub fn point(kind: EventKind, start: f64) -> Self {
        Self { kind, start, duration: 0.0 }
    }

    pub fn end(&self) -> f64 {
        self.start + self.duration
    }
}

/// One timestamped tri-axial accelerometer reading with optional context
/// channels from the temperature and air-pressure sensors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AccelSample {
    /// Seconds since trace start; consecutive samples are 1/sample_rate apart.
    pub t: f64,
    pub ax: f64,
    pub ay: f64,
    pub az: f64,
    /// Skin temperature, °C.
    pub skin_temp: Option<f64>,
    /// Ambient pressure, Pa.
    pub pressure: Option<f64>,
}

fn default_sample_rate() -> f64 {
    100.0
}

fn default_heart_impulse_width() -> f64 {
    0.1
}

fn default_c1() -> f64 {
    1.0
}

fn default_c2() -> f64 {
    0.05
}

fn default_orientation() -> [f64; 3] {
    [0.0, 0.0, 1.0]
}

fn default_gravity() -> bool {
    true
}

fn default_skin_temp() -> f64 {
    33.0
}

fn default_pressure() -> f64 {
    101_325.0
}

/// Generator parameters for one synthetic recording.
///
/// The chest moves as a weighted sum of a slow respiration component and a
/// train of short heart impulses; `c1` and `c2` are the mixing weights.
/// Scheduled events add coughs or suspend respiration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysioScenario {
    /// Trace length, seconds.
    pub duration: f64,
    /// Samples per second.
    #[serde(default = "default_sample_rate")]
    pub sample_rate: f64,
    /// Respiration frequency, breaths per second.
    pub resp_rate: f64,
    /// Peak chest excursion of the respiration component, meters.
    pub resp_amplitude: f64,
    /// Heart impulse frequency, beats per second.
    pub heart_rate: f64,
    /// Peak displacement of one heart impulse, meters.
    pub heart_impulse_amplitude: f64,
    /// Duration of one heart impulse, seconds; must fit inside a beat period.
    #[serde(default = "default_heart_impulse_width")]
    pub heart_impulse_width: f64,
    #[serde(default = "default_c1")]
    pub c1: f64,
    #[serde(default = "default_c2")]
    pub c2: f64,
    /// Unit vector: sensitive-axis direction of the sensor relative to the
    /// chest normal.
    #[serde(default = "default_orientation")]
    pub orientation: [f64; 3],
    /// Add the constant gravity vector along the world vertical.
    #[serde(default = "default_gravity")]
    pub gravity_included: bool,
    /// Additive white noise per axis, m/s² standard deviation.
    #[serde(default)]
    pub noise_std: f64,
    /// Scheduled coughs and breath-hold spans.
    #[serde(default)]
    pub events: Vec<EventMark>,
    /// Skin temperature at t = 0, °C.
    #[serde(default = "default_skin_temp")]
    pub skin_temp: f64,
    /// Slow skin-temperature ramp, °C per second.
    #[serde(default)]
    pub skin_temp_drift: f64,
    /// Constant ambient pressure, Pa.
    #[serde(default = "default_pressure")]
    pub ambient_pressure: f64,
}

impl PhysioScenario {
    /// Parse a scenario from its TOML document and validate it.
    pub fn from_toml_str(text: &str) -> Result<Self, ScenarioError> {
        let scenario: Self = toml::from_str(text)?;
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("scenario serializes")
    }

    /// Number of samples in the synthesized trace.
    pub fn sample_count(&self) -> usize {
        (self.duration * self.sample_rate).round() as usize
    }

    /// Check every invariant, naming the first violated field.
    pub fn validate(&self) -> Result<(), ScenarioError> {
        fn fail(field: &'static str, reason: impl Into<String>) -> Result<(), ScenarioError> {
            Err(ScenarioError::Invalid { field, reason: reason.into() })
        }

        if !(self.duration > 0.0) {
            return fail("duration", format!("must be > 0, got {}", self.duration));
        }
        if !(self.sample_rate > 0.0) {
            return fail("sample_rate", format!("must be > 0, got {}", self.sample_rate));
        }
        for (field, value) in [
            ("resp_rate", self.resp_rate),
            ("resp_amplitude", self.resp_amplitude),
            ("heart_rate", self.heart_rate),
            ("heart_impulse_amplitude", self.heart_impulse_amplitude),
            ("noise_std", self.noise_std),
        ] {
            if !(value >= 0.0) {
                return fail(field, format!("must be >= 0, got {value}"));
            }
        }
        if !(self.heart_impulse_width > 0.0) {
            return fail(
                "heart_impulse_width",
                format!("must be > 0, got {}", self.heart_impulse_width),
            );
        }
        if self.heart_rate > 0.0 && self.heart_impulse_width * self.heart_rate >= 1.0 {
            return fail(
                "heart_impulse_width",
                format!(
                    "impulses overlap: width {} s * rate {} /s must be < 1",
                    self.heart_impulse_width, self.heart_rate
                ),
            );
        }
        let norm = self
            .orientation
            .iter()
            .map(|c| c * c)
            .sum::<f64>()
            .sqrt();
        if !((norm - 1.0).abs() <= 1e-9) {
            return fail("orientation", format!("must have unit norm, got |v| = {norm}"));
        }
        if !(self.ambient_pressure > 0.0) {
            return fail(
                "ambient_pressure",
                format!("must be > 0, got {}", self.ambient_pressure),
            );
        }
        self.validate_events()?;
        Ok(())
    }

    fn validate_events(&self) -> Result<(), ScenarioError> {
        let fail = |reason: String| ScenarioError::Invalid { field: "events", reason };
        for event in &self.events {
            match event.kind {
                EventKind::Cough | EventKind::BreathHold => {}
                other => {
                    return Err(fail(format!(
                        "only cough and breath_hold events may be scheduled, got {other:?}"
                    )))
                }
            }
            if !(event.start >= 0.0) {
                return Err(fail(format!("event start {} must be >= 0", event.start)));
            }
            if !(event.duration >= 0.0) {
                return Err(fail(format!("event duration {} must be >= 0", event.duration)));
            }
            if event.end() > self.duration + 1e-12 {
                return Err(fail(format!(
                    "event [{}, {}] extends past duration {}",
                    event.start,
                    event.end(),
                    self.duration
                )));
            }
        }
        for kind in [EventKind::Cough, EventKind::BreathHold] {
            let mut same: Vec<&EventMark> =
                self.events.iter().filter(|e| e.kind == kind).collect();
            same.sort_by(|a, b| a.start.total_cmp(&b.start));
            for pair in same.windows(2) {
                if pair[1].start < pair[0].end() {
                    return Err(fail(format!(
                        "{kind:?} events overlap at {} s",
                        pair[1].start
                    )));
                }
            }
        }
        Ok(())
    }

    /// Breath-hold spans as (start, duration), sorted by start.
    pub fn hold_spans(&self) -> Vec<(f64, f64)> {
        let mut spans: Vec<(f64, f64)> = self
            .events
            .iter()
            .filter(|e| e.kind == EventKind::BreathHold)
            .map(|e| (e.start, e.duration))
            .collect();
        spans.sort_by(|a, b| a.0.total_cmp(&b.0));
        spans
    }

    /// Scheduled cough times, sorted.
    pub fn cough_times(&self) -> Vec<f64> {
        let mut times: Vec<f64> = self
            .events
            .iter()
            .filter(|e| e.kind == EventKind::Cough)
            .map(|e| e.start)
            .collect();
        times.sort_by(|a, b| a.total_cmp(b));
        times
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> PhysioScenario {
        PhysioScenario {
            duration: 7.2,
            sample_rate: 100.0,
            resp_rate: 1.0 / 7.2,
            resp_amplitude: 0.02,
            heart_rate: 4.0 / 7.2,
            heart_impulse_amplitude: 0.002,
            heart_impulse_width: 0.1,
            c1: 1.0,
            c2: 0.05,
            orientation: [0.0, 0.0, 1.0],
            gravity_included: true,
            noise_std: 0.0,
            events: vec![],
            skin_temp: 33.0,
            skin_temp_drift: 0.0,
            ambient_pressure: 101_325.0,
        }
    }

    #[test]
    fn valid_scenario_passes() {
        base().validate().unwrap();
    }

    #[test]
    fn rejects_nonpositive_duration() {
        let mut s = base();
        s.duration = 0.0;
        let err = s.validate().unwrap_err();
        assert!(err.to_string().contains("duration"), "{err}");
    }

    #[test]
    fn rejects_overlapping_heart_impulses() {
        let mut s = base();
        s.heart_rate = 2.0;
        s.heart_impulse_width = 0.6;
        let err = s.validate().unwrap_err();
        assert!(err.to_string().contains("heart_impulse_width"), "{err}");
    }

    #[test]
    fn rejects_non_unit_orientation() {
        let mut s = base();
        s.orientation = [0.0, 0.0, 1.1];
        let err = s.validate().unwrap_err();
        assert!(err.to_string().contains("orientation"), "{err}");
    }

    #[test]
    fn rejects_event_past_duration() {
        let mut s = base();
        s.events.push(EventMark { kind: EventKind::BreathHold, start: 5.0, duration: 3.0 });
        let err = s.validate().unwrap_err();
        assert!(err.to_string().contains("events"), "{err}");
    }

    #[test]
    fn rejects_overlapping_holds() {
        let mut s = base();
        s.events.push(EventMark { kind: EventKind::BreathHold, start: 1.0, duration: 2.0 });
        s.events.push(EventMark { kind: EventKind::BreathHold, start: 2.5, duration: 1.0 });
        assert!(s.validate().is_err());
    }

    #[test]
    fn rejects_scheduled_heart_beat() {
        let mut s = base();
        s.events.push(EventMark::point(EventKind::HeartBeat, 1.0));
        assert!(s.validate().is_err());
    }

    #[test]
    fn toml_round_trip() {
        let mut s = base();
        s.events.push(EventMark::point(EventKind::Cough, 5.85));
        let text = s.to_toml_string();
        let back = PhysioScenario::from_toml_str(&text).unwrap();
        assert_eq!(s, back);
    }

    #[test]
    fn toml_defaults_fill_in() {
        let text = "duration = 7.2\nresp_rate = 0.2\nresp_amplitude = 0.01\n\
                    heart_rate = 1.0\nheart_impulse_amplitude = 0.001\n";
        let s = PhysioScenario::from_toml_str(text).unwrap();
        assert_eq!(s.sample_rate, 100.0);
        assert_eq!(s.c1, 1.0);
        assert_eq!(s.c2, 0.05);
        assert_eq!(s.orientation, [0.0, 0.0, 1.0]);
        assert!(s.gravity_included);
    }

    #[test]
    fn sample_count_is_duration_times_rate() {
        assert_eq!(base().sample_count(), 720);
    }
}
