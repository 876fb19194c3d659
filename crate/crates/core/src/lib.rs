//! Indirect cardiorespiratory monitoring in software: a physics-based
//! chest-motion simulator standing in for a garment-mounted accelerometer,
//! the signal chain that recovers heartbeat and respiration counts (and
//! their ratio) from tri-axial acceleration, and the binary telemetry
//! protocol joining a sensor node to a collector over a lossy link.
//!
//! The crate is organized along the data path:
//!
//! * [`scenario`] / [`signal_model`] — scenario types and the forward model
//!   that synthesizes ground-truth traces.
//! * [`dsp`] — magnitude, gravity removal, double integration, band
//!   separation, peak/cough detection and windowed vitals counting.
//! * [`protocol`] — frame codec, CRC integrity, sequence tracking.
//! * [`nodes`] — sensor and collector processes plus the impairable link.
//! * [`files`] — trace CSV and JSONL persistence.

pub mod dsp;
pub mod files;
pub mod nodes;
pub mod protocol;
pub mod scenario;
pub mod signal_model;

pub use dsp::{
    altitude_from_pressure, classify_hrr, count_vitals, detect_cough, detect_peaks,
    integrate_twice, magnitude, remove_gravity, run_pipeline, separate_bands, DetectedEvents,
    DspError, HrrStatus, PipelineConfig, VitalsReport, WindowContext,
};
pub use nodes::{
    central_node_run, impair_link, read_session_dir, sensor_node_run, sha256_hex,
    write_session_dir, AlertRecord, ImpairmentLog, LinkConfig, NodeError, SessionConfig,
    SessionRecord,
};
pub use protocol::{
    crc16_ccitt_false, decode_frame, encode_frame, hex_dump, samples_to_si, scan_frames,
    track_sequence, EncodeError, FrameError, LinkStats, SensorFrame,
};
pub use scenario::{
    AccelSample, EventKind, EventMark, PhysioScenario, ScenarioError, STANDARD_GRAVITY,
};
pub use signal_model::{displacement_of, synthesize_trace};
