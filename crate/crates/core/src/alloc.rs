//! Per-request placement decisions: score every candidate device with the
//! regression models, filter by power availability, then pick per policy.
//! Also carries the power-minimizing greedy proxy baseline used for
//! comparative runs.

use thiserror::Error;

use crate::domain::Requirement;
use crate::regression::{predict_energy, predict_exec_time, RegressionModel};

#[derive(Debug, Error, PartialEq)]
pub enum AllocError {
    #[error("no candidate devices")]
    NoDevices,
    #[error("regression failure: {0}")]
    Regression(#[from] crate::regression::RegressionError),
}

/// Placement strategy for a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Policy {
    DeadlineAware,
    EnergyAware,
    Hybrid,
    BaselinePowerMin,
}

impl Policy {
    pub const ALL: [Policy; 4] = [
        Policy::DeadlineAware,
        Policy::EnergyAware,
        Policy::Hybrid,
        Policy::BaselinePowerMin,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Policy::DeadlineAware => "deadline_aware",
            Policy::EnergyAware => "energy_aware",
            Policy::Hybrid => "hybrid",
            Policy::BaselinePowerMin => "baseline_power_min",
        }
    }

    pub fn parse(s: &str) -> Option<Policy> {
        Policy::ALL.into_iter().find(|p| p.name() == s)
    }

    /// Requirement stamped onto generated applications for this run policy.
    /// The baseline ignores requirements entirely.
    pub fn requirement(&self) -> Requirement {
        match self {
            Policy::DeadlineAware => Requirement::DeadlineAware,
            Policy::EnergyAware => Requirement::EnergyAware,
            Policy::Hybrid => Requirement::Hybrid,
            Policy::BaselinePowerMin => Requirement::Unknown,
        }
    }
}

/// Feature snapshot of one device at decision time. Pure data: decisions are
/// a function of the candidate list alone, which makes logged decisions
/// replayable.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub device_id: u32,
    pub cpu_utilization: f64,
    pub mobility_m: f64,
    pub net_comm_s: f64,
    pub response_time_s: f64,
    /// Measured energy of the device's last completed task.
    pub energy_usage_j: f64,
    /// Battery reserve at decision time; infinite for mains nodes.
    pub remaining_energy_j: f64,
    /// Power draw at the current background utilization.
    pub current_power_w: f64,
}

/// The model pair consulted per decision.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSet {
    pub exec_time: RegressionModel,
    pub energy: RegressionModel,
}

/// Tunables for scoring and selection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AllocParams {
    pub hybrid_weight: f64,
    pub safety_margin: f64,
}

impl Default for AllocParams {
    fn default() -> Self {
        AllocParams {
            hybrid_weight: 0.5,
            safety_margin: crate::energy::DEFAULT_SAFETY_MARGIN,
        }
    }
}

/// Per-device predictions for one request.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeviceScore {
    pub device_id: u32,
    pub etp_s: f64,
    pub eec_j: f64,
    pub power_available: bool,
}

/// Chosen placement (or the none-decision when the requirement is unknown).
#[derive(Debug, Clone, PartialEq)]
pub struct AllocationDecision {
    pub app_id: u32,
    pub policy: Option<Policy>,
    pub chosen_device_id: Option<u32>,
    pub predicted_exec_s: Option<f64>,
    pub predicted_energy_j: Option<f64>,
    pub decided_at_s: f64,
    /// True when every candidate failed the power filter and selection fell
    /// back to the unfiltered set.
    pub filtered_fallback: bool,
}

impl AllocationDecision {
    fn none(app_id: u32, decided_at_s: f64) -> Self {
        AllocationDecision {
            app_id,
            policy: None,
            chosen_device_id: None,
            predicted_exec_s: None,
            predicted_energy_j: None,
            decided_at_s,
            filtered_fallback: false,
        }
    }
}

/// Predicts execution time and energy for every candidate.
///
/// The dichotomous power-availability feature is resolved in two passes: a
/// provisional execution-time prediction with the feature at 1 sizes the
/// load, the battery reserve is checked against it, and the final
/// predictions use the resolved flag.
pub fn score_all(
    candidates: &[Candidate],
    models: &ModelSet,
    params: &AllocParams,
) -> Result<Vec<DeviceScore>, AllocError> {
    if candidates.is_empty() {
        return Err(AllocError::NoDevices);
    }
    let mut scores = Vec::with_capacity(candidates.len());
    for c in candidates {
        let mut features = [
            c.cpu_utilization,
            c.mobility_m,
            c.net_comm_s,
            c.response_time_s,
            1.0,
            c.energy_usage_j,
        ];
        let provisional = predict_exec_time(&models.exec_time, &features)?;
        let need = provisional * c.current_power_w * params.safety_margin;
        let available = c.remaining_energy_j >= need;
        features[4] = available as u8 as f64;
        let etp_s = predict_exec_time(&models.exec_time, &features)?;
        let energy_features = [
            c.cpu_utilization,
            c.mobility_m,
            c.net_comm_s,
            c.response_time_s,
            features[4],
            etp_s,
        ];
        let eec_j = predict_energy(&models.energy, &energy_features)?;
        scores.push(DeviceScore { device_id: c.device_id, etp_s, eec_j, power_available: available });
    }
    Ok(scores)
}

fn argmin_by<F: Fn(&DeviceScore) -> f64>(scores: &[DeviceScore], key: F) -> Result<u32, AllocError> {
    let mut best: Option<(f64, u32)> = None;
    for s in scores {
        let v = key(s);
        match best {
            None => best = Some((v, s.device_id)),
            Some((bv, bid)) => {
                if v < bv || (v == bv && s.device_id < bid) {
                    best = Some((v, s.device_id));
                }
            }
        }
    }
    best.map(|(_, id)| id).ok_or(AllocError::NoDevices)
}

/// Device with the minimum predicted execution time; ties go to the lowest id.
pub fn select_deadline(scores: &[DeviceScore]) -> Result<u32, AllocError> {
    argmin_by(scores, |s| s.etp_s)
}

/// Device with the minimum predicted energy consumption; ties go to the lowest id.
pub fn select_energy(scores: &[DeviceScore]) -> Result<u32, AllocError> {
    argmin_by(scores, |s| s.eec_j)
}

/// Weighted trade-off: min-max normalize both prediction columns over the
/// candidate set (a constant column normalizes to 0) and minimize
/// `w * etp_norm + (1 - w) * eec_norm`.
pub fn select_hybrid(scores: &[DeviceScore], weight_w: f64) -> Result<u32, AllocError> {
    if scores.is_empty() {
        return Err(AllocError::NoDevices);
    }
    let norm = |get: fn(&DeviceScore) -> f64| {
        let min = scores.iter().map(get).fold(f64::INFINITY, f64::min);
        let max = scores.iter().map(get).fold(f64::NEG_INFINITY, f64::max);
        let range = max - min;
        move |s: &DeviceScore| if range > 0.0 { (get(s) - min) / range } else { 0.0 }
    };
    let etp_norm = norm(|s| s.etp_s);
    let eec_norm = norm(|s| s.eec_j);
    argmin_by(scores, |s| weight_w * etp_norm(s) + (1.0 - weight_w) * eec_norm(s))
}

/// Policy dispatch over a pre-scored candidate set.
pub fn allocate_scored(
    scores: &[DeviceScore],
    app_id: u32,
    requirement: Requirement,
    params: &AllocParams,
    decided_at_s: f64,
) -> Result<AllocationDecision, AllocError> {
    if scores.is_empty() {
        return Err(AllocError::NoDevices);
    }
    type Selector = fn(&[DeviceScore], &AllocParams) -> Result<u32, AllocError>;
    let (policy, selector): (Policy, Selector) =
        match requirement {
            Requirement::DeadlineAware => (Policy::DeadlineAware, |s, _| select_deadline(s)),
            Requirement::EnergyAware => (Policy::EnergyAware, |s, _| select_energy(s)),
            Requirement::Hybrid => (Policy::Hybrid, |s, p| select_hybrid(s, p.hybrid_weight)),
            Requirement::Unknown => return Ok(AllocationDecision::none(app_id, decided_at_s)),
        };

    // Devices that cannot power the predicted load are dropped first; if
    // nothing survives, fall back to the full set and flag the decision.
    let powered: Vec<DeviceScore> = scores.iter().filter(|s| s.power_available).copied().collect();
    let (pool, filtered_fallback): (&[DeviceScore], bool) =
        if powered.is_empty() { (scores, true) } else { (&powered, false) };

    let chosen = selector(pool, params)?;
    let score = pool.iter().find(|s| s.device_id == chosen).expect("chosen id comes from pool");
    Ok(AllocationDecision {
        app_id,
        policy: Some(policy),
        chosen_device_id: Some(chosen),
        predicted_exec_s: Some(score.etp_s),
        predicted_energy_j: Some(score.eec_j),
        decided_at_s,
        filtered_fallback,
    })
}

/// Full placement pipeline: score every candidate, then dispatch on the
/// request's requirement. An unknown requirement yields the none-decision.
pub fn allocate(
    candidates: &[Candidate],
    app_id: u32,
    requirement: Requirement,
    models: &ModelSet,
    params: &AllocParams,
    decided_at_s: f64,
) -> Result<AllocationDecision, AllocError> {
    let scores = score_all(candidates, models, params)?;
    allocate_scored(&scores, app_id, requirement, params, decided_at_s)
}

/// Greedy proxy baseline: the device currently drawing the least power,
/// ignoring deadlines and the regression models.
pub fn baseline_power_min(
    candidates: &[Candidate],
    app_id: u32,
    decided_at_s: f64,
) -> Result<AllocationDecision, AllocError> {
    let mut best: Option<(f64, u32)> = None;
    for c in candidates {
        match best {
            None => best = Some((c.current_power_w, c.device_id)),
            Some((bv, bid)) => {
                if c.current_power_w < bv || (c.current_power_w == bv && c.device_id < bid) {
                    best = Some((c.current_power_w, c.device_id));
                }
            }
        }
    }
    let (_, id) = best.ok_or(AllocError::NoDevices)?;
    Ok(AllocationDecision {
        app_id,
        policy: Some(Policy::BaselinePowerMin),
        chosen_device_id: Some(id),
        predicted_exec_s: None,
        predicted_energy_j: None,
        decided_at_s,
        filtered_fallback: false,
    })
}
