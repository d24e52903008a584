//! Utilization-to-power conversion, exact piecewise energy integration over
//! traces, and battery bookkeeping.

use thiserror::Error;

use crate::domain::FogDevice;
use crate::trace::UtilizationTrace;

/// Battery reserve must cover predicted load times this factor before a
/// device reports power availability.
pub const DEFAULT_SAFETY_MARGIN: f64 = 1.2;

#[derive(Debug, Error, PartialEq)]
pub enum EnergyError {
    #[error("utilization {0} outside [0,1]")]
    UtilizationOutOfRange(f64),
    #[error("invalid window [{0}, {1}]")]
    InvalidWindow(f64, f64),
}

/// Linear utilization-to-power model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerModel {
    pub power_idle_w: f64,
    pub power_max_w: f64,
}

impl PowerModel {
    pub fn new(power_idle_w: f64, power_max_w: f64) -> Self {
        debug_assert!(0.0 <= power_idle_w && power_idle_w < power_max_w);
        PowerModel { power_idle_w, power_max_w }
    }
}

/// Power draw at a utilization level: idle + (max - idle) * u.
pub fn power_at(model: &PowerModel, utilization: f64) -> Result<f64, EnergyError> {
    if !(0.0..=1.0).contains(&utilization) {
        return Err(EnergyError::UtilizationOutOfRange(utilization));
    }
    Ok(model.power_idle_w + (model.power_max_w - model.power_idle_w) * utilization)
}

/// Energy in joules consumed over `[t0_s, t1_s]` while the node tracks
/// `trace`. Exact piecewise-constant integration: each trace segment
/// intersecting the window contributes power * overlap.
pub fn energy_over(
    model: &PowerModel,
    trace: &UtilizationTrace,
    t0_s: f64,
    t1_s: f64,
) -> Result<f64, EnergyError> {
    if !(0.0 <= t0_s && t0_s <= t1_s) || !t1_s.is_finite() {
        return Err(EnergyError::InvalidWindow(t0_s, t1_s));
    }
    let interval = trace.sample_interval_s;
    let mut total = 0.0;
    let mut seg = (t0_s / interval).floor();
    loop {
        let seg_start = seg * interval;
        if seg_start >= t1_s {
            break;
        }
        let lo = seg_start.max(t0_s);
        let hi = (seg_start + interval).min(t1_s);
        if hi > lo {
            let u = trace.samples[(seg as u64 % trace.samples.len() as u64) as usize];
            total += power_at(model, u)? * (hi - lo);
        }
        seg += 1.0;
    }
    Ok(total)
}

/// Result of a battery drain step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DrainOutcome {
    pub battery_pct: f64,
    pub depleted: bool,
}

/// Removes `joules` from the device battery, clamping at empty. Mains
/// devices are untouched and never deplete.
pub fn drain_battery(dev: &mut FogDevice, joules: f64) -> DrainOutcome {
    debug_assert!(joules >= 0.0);
    if dev.is_mains() {
        return DrainOutcome { battery_pct: dev.battery_pct, depleted: false };
    }
    let new_pct = (dev.battery_pct - joules / dev.battery_capacity_j).max(0.0);
    dev.battery_pct = new_pct;
    DrainOutcome { battery_pct: new_pct, depleted: new_pct == 0.0 }
}

/// Dichotomous power-availability predictor: 1 when the battery reserve
/// covers the predicted load with the given safety margin, else 0.
/// Mains-powered nodes always answer 1.
pub fn power_available_with_margin(
    dev: &FogDevice,
    predicted_exec_s: f64,
    predicted_power_w: f64,
    margin: f64,
) -> u8 {
    if dev.is_mains() {
        return 1;
    }
    let need = predicted_exec_s * predicted_power_w * margin;
    (dev.remaining_energy_j() >= need) as u8
}

/// [`power_available_with_margin`] at the default 1.2 margin.
pub fn power_available(dev: &FogDevice, predicted_exec_s: f64, predicted_power_w: f64) -> u8 {
    power_available_with_margin(dev, predicted_exec_s, predicted_power_w, DEFAULT_SAFETY_MARGIN)
}
