//! CPU-utilization traces: PlanetLab-format parsing, synthetic generation,
//! zero-order-hold replay with wraparound.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::domain::FogDevice;

/// Seconds between PlanetLab samples.
pub const PLANETLAB_INTERVAL_S: f64 = 300.0;

#[derive(Debug, Error, PartialEq)]
pub enum TraceError {
    #[error("line {0} is not an integer in 0..=100")]
    MalformedLine(usize),
    #[error("trace contains no samples")]
    EmptyTrace,
    #[error("no traces to assign from")]
    EmptyTraceSet,
    #[error("invalid trace parameter: {0}")]
    InvalidParameter(&'static str),
}

/// A replayable utilization series. Samples are fractions in [0, 1] held
/// constant for `sample_interval_s` each; replay wraps past the end.
#[derive(Debug, Clone, PartialEq)]
pub struct UtilizationTrace {
    pub trace_id: usize,
    pub samples: Vec<f64>,
    pub sample_interval_s: f64,
}

impl UtilizationTrace {
    /// Utilization at time `t_s` (zero-order hold, wraparound).
    pub fn sample(&self, t_s: f64) -> f64 {
        sample_utilization(self, t_s)
    }

    /// Copy of this trace with `add` added to every sample, capped at 1.0.
    /// Models the extra load a running task puts on the node.
    pub fn with_load(&self, add: f64) -> UtilizationTrace {
        UtilizationTrace {
            trace_id: self.trace_id,
            samples: self.samples.iter().map(|u| (u + add).min(1.0)).collect(),
            sample_interval_s: self.sample_interval_s,
        }
    }
}

/// Parses a PlanetLab trace file: one integer percent per line.
pub fn parse_trace(text: &str) -> Result<UtilizationTrace, TraceError> {
    let mut samples = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let pct: u32 = line.parse().map_err(|_| TraceError::MalformedLine(idx + 1))?;
        if pct > 100 {
            return Err(TraceError::MalformedLine(idx + 1));
        }
        samples.push(pct as f64 / 100.0);
    }
    if samples.is_empty() {
        return Err(TraceError::EmptyTrace);
    }
    Ok(UtilizationTrace {
        trace_id: 0,
        samples,
        sample_interval_s: PLANETLAB_INTERVAL_S,
    })
}

/// Writes a trace back to the PlanetLab line format.
pub fn serialize_trace(trace: &UtilizationTrace) -> String {
    let mut out = String::new();
    for s in &trace.samples {
        out.push_str(&format!("{}\n", (s * 100.0).round() as u32));
    }
    out
}

/// Zero-order-hold lookup: `samples[floor(t / interval) mod len]`.
pub fn sample_utilization(trace: &UtilizationTrace, t_s: f64) -> f64 {
    debug_assert!(t_s >= 0.0, "sample_utilization called with negative time");
    let idx = (t_s / trace.sample_interval_s).floor() as u64;
    trace.samples[(idx % trace.samples.len() as u64) as usize]
}

/// Uniform seeded assignment of traces to devices. Devices may share traces.
pub fn assign_traces(
    devices: &[FogDevice],
    traces: &[UtilizationTrace],
    seed: u64,
) -> Result<Vec<(u32, usize)>, TraceError> {
    if traces.is_empty() {
        return Err(TraceError::EmptyTraceSet);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(devices
        .iter()
        .map(|d| (d.id, rng.gen_range(0..traces.len())))
        .collect())
}

/// Deterministic synthetic trace: `clamp(mean + uniform(-jitter, +jitter), 0, 1)`.
pub fn synth_trace(seed: u64, length: usize, mean: f64, jitter: f64) -> Result<UtilizationTrace, TraceError> {
    if !(0.0..=1.0).contains(&mean) {
        return Err(TraceError::InvalidParameter("mean outside [0,1]"));
    }
    if !(jitter >= 0.0 && jitter.is_finite()) {
        return Err(TraceError::InvalidParameter("jitter must be finite and >= 0"));
    }
    if length == 0 {
        return Err(TraceError::InvalidParameter("length must be >= 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples = (0..length)
        .map(|_| (mean + rng.gen_range(-jitter..=jitter)).clamp(0.0, 1.0))
        .collect();
    Ok(UtilizationTrace {
        trace_id: 0,
        samples,
        sample_interval_s: PLANETLAB_INTERVAL_S,
    })
}
