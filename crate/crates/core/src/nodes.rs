//! Sensor node and central node as two simulated processes joined by an
//! impairable byte channel: scenario → frames → lossy link → decoded
//! samples → vitals reports → persisted session.

use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::dsp::{
    self, hrr_serde, DspError, HrrStatus, PipelineConfig, VitalsReport,
};
use crate::files::{self, FileError};
use crate::protocol::{
    decode_frame, encode_frame, frame_len, samples_to_si, track_sequence, EncodeError,
    FrameError, LinkStats, SensorFrame, MAX_SAMPLES_PER_FRAME,
};
use crate::scenario::{AccelSample, PhysioScenario, ScenarioError, STANDARD_GRAVITY};
use crate::signal_model::synthesize_trace;

/// Lost frames are bridged by interpolation up to this many consecutive
/// frames; longer outages split the trace into separate segments.
pub const MAX_INTERPOLATED_FRAMES: u64 = 3;

#[derive(Debug, Error)]
pub enum NodeError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Dsp(#[from] DspError),
    #[error(transparent)]
    Encode(#[from] EncodeError),
    #[error(transparent)]
    File(#[from] FileError),
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("invalid link config: {0}")]
    InvalidLinkConfig(String),
    #[error("invalid session config: {0}")]
    InvalidSessionConfig(String),
    #[error("malformed session: {0}")]
    MalformedSession(String),
}

/// Frame-granular channel impairments, seeded and deterministic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkConfig {
    /// Probability that a frame is dropped entirely.
    pub loss_prob: f64,
    /// Probability that a surviving frame has one bit flipped.
    pub bit_flip_prob: f64,
    pub seed: u64,
}

impl Default for LinkConfig {
    fn default() -> Self {
        Self { loss_prob: 0.0, bit_flip_prob: 0.0, seed: 0 }
    }
}

impl LinkConfig {
    pub fn validate(&self) -> Result<(), NodeError> {
        for (name, p) in [("loss_prob", self.loss_prob), ("bit_flip_prob", self.bit_flip_prob)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(NodeError::InvalidLinkConfig(format!(
                    "{name} must be in [0, 1], got {p}"
                )));
            }
        }
        Ok(())
    }
}

/// Ground-truth record of what the impaired link did to each frame.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ImpairmentLog {
    pub total_frames: usize,
    /// Indices of dropped frames, ascending.
    pub dropped: Vec<usize>,
    /// (frame index, absolute flipped bit) of corrupted frames, ascending.
    pub corrupted: Vec<(usize, usize)>,
}

impl ImpairmentLog {
    /// Number of maximal runs of consecutive dropped frames; each run shows
    /// up as one sequence gap at the receiver.
    pub fn dropped_run_count(&self) -> usize {
        let mut runs = 0;
        let mut prev: Option<usize> = None;
        for &i in &self.dropped {
            if prev != Some(i.wrapping_sub(1)) {
                runs += 1;
            }
            prev = Some(i);
        }
        runs
    }

    pub fn is_dropped(&self, index: usize) -> bool {
        self.dropped.binary_search(&index).is_ok()
    }
}

/// Synthesize a scenario and encode it as a sequence of telemetry frames
/// with consecutive sequence numbers starting at zero.
pub fn sensor_node_run(
    scenario: &PhysioScenario,
    batch_n: usize,
    seed: u64,
    node_id: u8,
) -> Result<Vec<Vec<u8>>, NodeError> {
    if batch_n == 0 || batch_n > MAX_SAMPLES_PER_FRAME {
        return Err(NodeError::InvalidSessionConfig(format!(
            "batch_n must be 1..=16, got {batch_n}"
        )));
    }
    let (trace, _) = synthesize_trace(scenario, seed)?;
    let mut frames = Vec::with_capacity(trace.len().div_ceil(batch_n));
    for (index, chunk) in trace.chunks(batch_n).enumerate() {
        let first = &chunk[0];
        let frame = SensorFrame {
            node_id,
            seq: (index % 65_536) as u16,
            t0_ms: (first.t * 1000.0).round().min(u32::MAX as f64) as u32,
            samples: chunk.iter().map(quantize_sample).collect(),
            skin_temp_centi: quantize_centi(first.skin_temp.unwrap_or(0.0)),
            pressure_pa: first.pressure.unwrap_or(0.0).round().clamp(0.0, u32::MAX as f64) as u32,
        };
        frames.push(encode_frame(&frame)?);
    }
    Ok(frames)
}

fn quantize_sample(s: &AccelSample) -> [i16; 3] {
    let q = |v: f64| (v / STANDARD_GRAVITY * 1000.0).round().clamp(-32768.0, 32767.0) as i16;
    [q(s.ax), q(s.ay), q(s.az)]
}

fn quantize_centi(v: f64) -> i16 {
    (v * 100.0).round().clamp(-32768.0, 32767.0) as i16
}

/// Pass encoded frames through the impaired link: drop whole frames, flip
/// one bit in the body of unlucky survivors. The flipped bit always lands
/// after the sync word, modelling payload corruption on the air interface.
pub fn impair_link(frames: &[Vec<u8>], cfg: &LinkConfig) -> (Vec<u8>, ImpairmentLog) {
    cfg.validate().expect("validated by callers");
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut stream = Vec::new();
    let mut log = ImpairmentLog { total_frames: frames.len(), ..Default::default() };
    for (index, frame) in frames.iter().enumerate() {
        if rng.random::<f64>() < cfg.loss_prob {
            log.dropped.push(index);
            continue;
        }
        if rng.random::<f64>() < cfg.bit_flip_prob && frame.len() > 2 {
            let body_bits = (frame.len() - 2) * 8;
            let bit = 16 + rng.random_range(0..body_bits);
            let mut corrupted = frame.clone();
            corrupted[bit / 8] ^= 0x80 >> (bit % 8);
            log.corrupted.push((index, bit));
            stream.extend_from_slice(&corrupted);
        } else {
            stream.extend_from_slice(frame);
        }
    }
    (stream, log)
}

/// Everything the collector needs to interpret one session's stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionConfig {
    pub node_id: u8,
    pub batch_n: usize,
    pub sample_rate: f64,
    pub pipeline: PipelineConfig,
    pub scenario_digest: String,
    pub pipeline_config_digest: String,
    pub scenario_seed: u64,
    pub link_seed: u64,
}

impl SessionConfig {
    pub fn validate(&self) -> Result<(), NodeError> {
        if self.batch_n == 0 || self.batch_n > MAX_SAMPLES_PER_FRAME {
            return Err(NodeError::InvalidSessionConfig(format!(
                "batch_n must be 1..=16, got {}",
                self.batch_n
            )));
        }
        if !(self.sample_rate > 0.0) {
            return Err(NodeError::InvalidSessionConfig(format!(
                "sample_rate must be > 0, got {}",
                self.sample_rate
            )));
        }
        self.pipeline.validate()?;
        Ok(())
    }

    pub fn session_id(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(self.scenario_digest.as_bytes());
        hasher.update(self.pipeline_config_digest.as_bytes());
        hasher.update(self.scenario_seed.to_be_bytes());
        hasher.update(self.link_seed.to_be_bytes());
        hex::encode(&hasher.finalize()[..8])
    }
}

/// SHA-256 of arbitrary bytes, hex encoded; used for config digests.
pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// One alert raised for a report whose status is not healthy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlertRecord {
    pub window_start: f64,
    pub window_end: f64,
    #[serde(with = "hrr_serde")]
    pub hrr: Option<f64>,
    pub status: HrrStatus,
}

/// Persistent outcome of one collector session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionRecord {
    pub session_id: String,
    pub scenario_digest: String,
    pub pipeline_config_digest: String,
    pub scenario_seed: u64,
    pub link_seed: u64,
    /// Session time of the first reconstructed sample, seconds.
    pub start_time_s: f64,
    pub link_stats: LinkStats,
    pub alerts: Vec<AlertRecord>,
    /// Stored separately in `reports.jsonl`, not inside `session.json`.
    #[serde(skip)]
    pub reports: Vec<VitalsReport>,
}

/// Decode a session byte stream, reconstruct the sample timeline, run the
/// vitals pipeline per contiguous segment and assemble the session record.
///
/// Frames arrive back to back, so the collector walks the stream in strides
/// of the expected frame length; a slot that fails its integrity checks is
/// rejected and consumes one sequence number, keeping dropped-frame gaps
/// and corrupted frames separately accounted.
pub fn central_node_run(
    stream: &[u8],
    cfg: &SessionConfig,
) -> Result<(SessionRecord, Vec<AccelSample>), NodeError> {
    cfg.validate()?;
    let fs = cfg.sample_rate;
    let expected_len = frame_len(cfg.batch_n);

    let mut stats = LinkStats::default();
    let mut segments: Vec<Vec<AccelSample>> = Vec::new();
    let mut current: Vec<AccelSample> = Vec::new();
    let mut prev_seq: u16 = u16::MAX; // virtual predecessor of seq 0
    let mut next_slot: u64 = 0; // absolute index of the next expected frame
    let mut pending_missing: u64 = 0;

    let mut pos = 0usize;
    while pos < stream.len() {
        match decode_frame(&stream[pos..]) {
            Ok(frame) => {
                let dropped = track_sequence(&mut stats, prev_seq, frame.seq) as u64;
                pending_missing += dropped;
                let slot = next_slot + dropped;
                let first_index = slot * cfg.batch_n as u64;
                let mut samples = samples_to_si(&frame, fs);
                // The wire timestamp is millisecond-quantized; rebuild the
                // timeline arithmetically so segments stay uniformly sampled.
                for (i, sample) in samples.iter_mut().enumerate() {
                    sample.t = (first_index + i as u64) as f64 / fs;
                }
                stats.frames_ok += 1;
                stats.samples_delivered += samples.len() as u64;

                if !current.is_empty() && pending_missing > 0 {
                    if pending_missing <= MAX_INTERPOLATED_FRAMES {
                        interpolate_gap(&mut current, &samples[0], fs);
                    } else {
                        segments.push(std::mem::take(&mut current));
                    }
                }
                current.extend(samples);
                pending_missing = 0;
                prev_seq = frame.seq;
                next_slot = slot + 1;
                pos += frame.encoded_len();
            }
            Err(FrameError::BadSync) => {
                stats.frames_malformed += 1;
                prev_seq = prev_seq.wrapping_add(1);
                next_slot += 1;
                pending_missing += 1;
                pos += expected_len;
            }
            Err(_) => {
                // CRC, count or length failure: the slot carried a frame
                // that did not survive the channel.
                stats.frames_crc_rejected += 1;
                prev_seq = prev_seq.wrapping_add(1);
                next_slot += 1;
                pending_missing += 1;
                pos += expected_len;
            }
        }
    }
    if !current.is_empty() {
        segments.push(current);
    }

    let mut reports = Vec::new();
    for segment in &segments {
        match dsp::run_pipeline(segment, &cfg.pipeline) {
            Ok((_, mut segment_reports)) => reports.append(&mut segment_reports),
            Err(DspError::InsufficientData { .. }) => {} // segment shorter than a window
            Err(e) => return Err(e.into()),
        }
    }

    let alerts = reports
        .iter()
        .filter(|r| r.status != HrrStatus::HealthyRange)
        .map(|r| AlertRecord {
            window_start: r.window_start,
            window_end: r.window_end,
            hrr: r.hrr,
            status: r.status,
        })
        .collect();

    let samples: Vec<AccelSample> = segments.into_iter().flatten().collect();
    let record = SessionRecord {
        session_id: cfg.session_id(),
        scenario_digest: cfg.scenario_digest.clone(),
        pipeline_config_digest: cfg.pipeline_config_digest.clone(),
        scenario_seed: cfg.scenario_seed,
        link_seed: cfg.link_seed,
        start_time_s: samples.first().map(|s| s.t).unwrap_or(0.0),
        link_stats: stats,
        alerts,
        reports,
    };
    Ok((record, samples))
}

/// Fill the sample gap between the end of `segment` and `next` by linear
/// interpolation on the uniform timeline.
fn interpolate_gap(segment: &mut Vec<AccelSample>, next: &AccelSample, fs: f64) {
    let last = *segment.last().expect("non-empty segment");
    let dt = 1.0 / fs;
    let missing = ((next.t - last.t) / dt).round() as i64 - 1;
    if missing <= 0 {
        return;
    }
    let lerp = |a: f64, b: f64, f: f64| a + (b - a) * f;
    let lerp_opt = |a: Option<f64>, b: Option<f64>, f: f64| match (a, b) {
        (Some(a), Some(b)) => Some(lerp(a, b, f)),
        _ => None,
    };
    for j in 1..=missing {
        let f = j as f64 / (missing + 1) as f64;
        segment.push(AccelSample {
            t: last.t + j as f64 * dt,
            ax: lerp(last.ax, next.ax, f),
            ay: lerp(last.ay, next.ay, f),
            az: lerp(last.az, next.az, f),
            skin_temp: lerp_opt(last.skin_temp, next.skin_temp, f),
            pressure: lerp_opt(last.pressure, next.pressure, f),
        });
    }
}

/// Write a session directory: `session.json`, `reports.jsonl`, `samples.csv`.
pub fn write_session_dir(
    dir: &Path,
    record: &SessionRecord,
    samples: &[AccelSample],
) -> Result<(), NodeError> {
    fs::create_dir_all(dir)?;
    let mut meta = serde_json::to_string_pretty(record).expect("session serializes");
    meta.push('\n');
    fs::write(dir.join("session.json"), meta)?;
    files::write_jsonl_file(&dir.join("reports.jsonl"), &record.reports)?;
    files::write_trace_csv_file(&dir.join("samples.csv"), samples)?;
    Ok(())
}

/// Read back a session directory written by [`write_session_dir`].
pub fn read_session_dir(dir: &Path) -> Result<SessionRecord, NodeError> {
    let meta_path = dir.join("session.json");
    let text = fs::read_to_string(&meta_path)
        .map_err(|e| NodeError::MalformedSession(format!("{}: {e}", meta_path.display())))?;
    let mut record: SessionRecord = serde_json::from_str(&text)
        .map_err(|e| NodeError::MalformedSession(format!("session.json: {e}")))?;
    let reports_path = dir.join("reports.jsonl");
    if !reports_path.exists() {
        return Err(NodeError::MalformedSession("reports.jsonl is missing".into()));
    }
    record.reports = files::read_jsonl_file(&reports_path)?;
    Ok(record)
}
