//! Forward model of chest motion: synthesizes the analytic displacement
//! produced by breathing and heartbeats and the tri-axial accelerometer
//! trace a sensor on the chest would record.
//!
//! The displacement is differentiated analytically, so the emitted
//! acceleration is exact up to floating point; tests can check it against
//! finite differences of [`displacement_of`].

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::scenario::{
    AccelSample, EventKind, EventMark, PhysioScenario, ScenarioError, COUGH_AMPLITUDE_FACTOR,
    COUGH_IMPULSE_WIDTH, STANDARD_GRAVITY,
};

/// Noiseless analytic chest displacement at time `t`, meters.
///
/// This is the exact waveform that [`synthesize_trace`] differentiates; it
/// serves as the ground-truth oracle for integration tests downstream.
pub fn displacement_of(scenario: &PhysioScenario, t: f64) -> Result<f64, ScenarioError> {
    scenario.validate()?;
    if !(0.0..=scenario.duration).contains(&t) {
        return Err(ScenarioError::TimeOutOfRange { t, duration: scenario.duration });
    }
    Ok(Motion::new(scenario).displacement(t))
}

/// Synthesize the accelerometer trace and the ground-truth event marks for
/// a scenario. Identical `(scenario, seed)` pairs produce identical output.
pub fn synthesize_trace(
    scenario: &PhysioScenario,
    seed: u64,
) -> Result<(Vec<AccelSample>, Vec<EventMark>), ScenarioError> {
    scenario.validate()?;
    let motion = Motion::new(scenario);
    let n = scenario.sample_count();
    let dt = 1.0 / scenario.sample_rate;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut trace = Vec::with_capacity(n);
    for i in 0..n {
        let t = i as f64 * dt;
        let scalar = motion.acceleration(t);
        let mut a = [
            scalar * scenario.orientation[0],
            scalar * scenario.orientation[1],
            scalar * scenario.orientation[2],
        ];
        if scenario.gravity_included {
            a[2] += STANDARD_GRAVITY;
        }
        if scenario.noise_std > 0.0 {
            for axis in &mut a {
                let z: f64 = StandardNormal.sample(&mut rng);
                *axis += scenario.noise_std * z;
            }
        }
        trace.push(AccelSample {
            t,
            ax: a[0],
            ay: a[1],
            az: a[2],
            skin_temp: Some(scenario.skin_temp + scenario.skin_temp_drift * t),
            pressure: Some(scenario.ambient_pressure),
        });
    }

    Ok((trace, truth_marks(scenario, &motion)))
}

/// Ground-truth marks: one heart_beat per impulse center, one breath per
/// completed respiration maximum outside holds, plus the scheduled events.
fn truth_marks(scenario: &PhysioScenario, motion: &Motion) -> Vec<EventMark> {
    let mut marks: Vec<EventMark> = Vec::new();
    for &center in &motion.beat_centers {
        marks.push(EventMark::point(EventKind::HeartBeat, center));
    }
    for t in breath_mark_times(scenario, &motion.holds) {
        marks.push(EventMark::point(EventKind::Breath, t));
    }
    for event in &scenario.events {
        marks.push(*event);
    }
    marks.sort_by(|a, b| a.start.total_cmp(&b.start));
    marks
}

/// Times of the respiration-cycle maxima, accounting for holds freezing the
/// breathing phase.
fn breath_mark_times(scenario: &PhysioScenario, holds: &[(f64, f64)]) -> Vec<f64> {
    let mut times = Vec::new();
    if scenario.resp_rate <= 0.0 {
        return times;
    }
    let mut k = 0u64;
    loop {
        // Phase maximum k sits at active time (k + 1/4) periods.
        let active = (k as f64 + 0.25) / scenario.resp_rate;
        let mut t = active;
        for &(start, dur) in holds {
            if t >= start {
                t += dur;
            }
        }
        if t > scenario.duration + 1e-9 {
            break;
        }
        times.push(t.min(scenario.duration));
        k += 1;
    }
    times
}

/// Breathing can only pause where the chest is momentarily still, so each
/// scheduled hold widens backwards to the nearest preceding stationary point
/// of the respiration cycle (or to the trace start, where the sinusoid has
/// not yet begun). This keeps displacement and velocity continuous across
/// hold boundaries; the hold still ends at its scheduled time.
fn effective_hold_spans(scenario: &PhysioScenario) -> Vec<(f64, f64)> {
    let scheduled = scenario.hold_spans();
    if scenario.resp_rate <= 0.0 || scenario.resp_amplitude <= 0.0 {
        return scheduled;
    }
    let quarter = 0.25 / scenario.resp_rate;
    let mut effective: Vec<(f64, f64)> = Vec::with_capacity(scheduled.len());
    for &(start, dur) in &scheduled {
        let end = start + dur;
        // Active breathing time at the scheduled start, given earlier holds.
        let mut active = start;
        for &(s, d) in &effective {
            active -= (start.min(s + d) - s).clamp(0.0, d);
        }
        // Latest stationary phase (odd quarter period) not after `active`.
        let k = ((active - quarter) / (2.0 * quarter)).floor();
        let snapped_active = if k < 0.0 { 0.0 } else { quarter * (2.0 * k + 1.0) };
        let snapped_start = start - (active - snapped_active);
        let snapped_start = effective
            .last()
            .map(|&(s, d)| snapped_start.max(s + d))
            .unwrap_or(snapped_start)
            .max(0.0);
        effective.push((snapped_start, end - snapped_start));
    }
    effective
}

/// Heart impulse centers: one beat every period, offset by half a period so
/// impulses sit fully inside the recording.
fn beat_centers(scenario: &PhysioScenario) -> Vec<f64> {
    let mut centers = Vec::new();
    if scenario.heart_rate <= 0.0 {
        return centers;
    }
    let period = 1.0 / scenario.heart_rate;
    let mut k = 0u64;
    loop {
        let center = (k as f64 + 0.5) * period;
        if center > scenario.duration + 1e-9 {
            break;
        }
        centers.push(center);
        k += 1;
    }
    centers
}

/// Precomputed analytic motion for one scenario.
struct Motion<'a> {
    scenario: &'a PhysioScenario,
    holds: Vec<(f64, f64)>,
    beat_centers: Vec<f64>,
    cough_centers: Vec<f64>,
}

impl<'a> Motion<'a> {
    fn new(scenario: &'a PhysioScenario) -> Self {
        Self {
            scenario,
            holds: effective_hold_spans(scenario),
            beat_centers: beat_centers(scenario),
            cough_centers: scenario.cough_times(),
        }
    }

    /// Breathing time elapsed up to `t`: holds freeze the respiration phase,
    /// which resumes continuously afterwards.
    fn active_time(&self, t: f64) -> f64 {
        let mut active = t;
        for &(start, dur) in &self.holds {
            let overlap = (t.min(start + dur) - start).clamp(0.0, dur);
            active -= overlap;
        }
        active
    }

    fn in_hold(&self, t: f64) -> bool {
        self.holds.iter().any(|&(start, dur)| t >= start && t < start + dur)
    }

    fn resp_displacement(&self, t: f64) -> f64 {
        let s = self.scenario;
        if s.resp_rate <= 0.0 || s.resp_amplitude <= 0.0 {
            return 0.0;
        }
        let phase = 2.0 * PI * s.resp_rate * self.active_time(t);
        s.resp_amplitude * phase.sin()
    }

    fn resp_acceleration(&self, t: f64) -> f64 {
        let s = self.scenario;
        if s.resp_rate <= 0.0 || s.resp_amplitude <= 0.0 || self.in_hold(t) {
            return 0.0;
        }
        let omega = 2.0 * PI * s.resp_rate;
        let phase = omega * self.active_time(t);
        -s.resp_amplitude * omega * omega * phase.sin()
    }

    /// Heart impulses plus cough transients (before the `c2` weight).
    fn heart_displacement(&self, t: f64) -> f64 {
        let s = self.scenario;
        let mut d = 0.0;
        for &center in &self.beat_centers {
            d += raised_cosine(t, center, s.heart_impulse_amplitude, s.heart_impulse_width);
        }
        let cough_amp = COUGH_AMPLITUDE_FACTOR * s.heart_impulse_amplitude;
        for &center in &self.cough_centers {
            d += raised_cosine(t, center, cough_amp, COUGH_IMPULSE_WIDTH);
        }
        d
    }

    fn heart_acceleration(&self, t: f64) -> f64 {
        let s = self.scenario;
        let mut a = 0.0;
        for &center in &self.beat_centers {
            a += raised_cosine_accel(t, center, s.heart_impulse_amplitude, s.heart_impulse_width);
        }
        let cough_amp = COUGH_AMPLITUDE_FACTOR * s.heart_impulse_amplitude;
        for &center in &self.cough_centers {
            a += raised_cosine_accel(t, center, cough_amp, COUGH_IMPULSE_WIDTH);
        }
        a
    }

    fn displacement(&self, t: f64) -> f64 {
        self.scenario.c1 * self.resp_displacement(t)
            + self.scenario.c2 * self.heart_displacement(t)
    }

    fn acceleration(&self, t: f64) -> f64 {
        self.scenario.c1 * self.resp_acceleration(t)
            + self.scenario.c2 * self.heart_acceleration(t)
    }
}

/// Raised-cosine bump of peak `amplitude` and total `width` centered on
/// `center`; zero outside, C¹-continuous at the edges.
fn raised_cosine(t: f64, center: f64, amplitude: f64, width: f64) -> f64 {
    let tau = t - center;
    if tau.abs() > width / 2.0 {
        return 0.0;
    }
    0.5 * amplitude * (1.0 + (2.0 * PI * tau / width).cos())
}

/// Second time derivative of [`raised_cosine`].
fn raised_cosine_accel(t: f64, center: f64, amplitude: f64, width: f64) -> f64 {
    let tau = t - center;
    if tau.abs() > width / 2.0 {
        return 0.0;
    }
    let omega = 2.0 * PI / width;
    -0.5 * amplitude * omega * omega * (omega * tau).cos()
}
