//! Core entity types shared by every other module: fog devices, application
//! requests, tasks and the telemetry rows that feed model training.

/// How a node is powered. Battery nodes drain and can deplete mid-run;
/// mains nodes never run out.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PowerSource {
    Battery,
    Mains,
}

/// One compute node of the fog fleet.
///
/// `battery_pct` and `cpu_availability_factor` are simulator-owned mutable
/// state; everything else is fixed at construction.
#[derive(Debug, Clone)]
pub struct FogDevice {
    pub id: u32,
    /// Millions of instructions per second.
    pub mips_capacity: f64,
    pub bandwidth_bps: f64,
    pub ram_mb: u64,
    /// User-to-device distance in meters (the mobility signal).
    pub distance_m: f64,
    /// Remaining battery as a fraction of `battery_capacity_j`.
    pub battery_pct: f64,
    /// Last drawn availability multiplier; 1.0 until a task has started.
    pub cpu_availability_factor: f64,
    /// Index into the run's trace table.
    pub trace_id: usize,
    pub power_idle_w: f64,
    pub power_max_w: f64,
    pub battery_capacity_j: f64,
    pub power_source: PowerSource,
}

impl FogDevice {
    pub fn is_mains(&self) -> bool {
        self.power_source == PowerSource::Mains
    }

    /// Energy still stored in the battery, in joules. Infinite for mains nodes.
    pub fn remaining_energy_j(&self) -> f64 {
        match self.power_source {
            PowerSource::Mains => f64::INFINITY,
            PowerSource::Battery => self.battery_pct * self.battery_capacity_j,
        }
    }
}

/// Fog server defaults (mains-powered, one per fleet unless configured).
pub const SERVER_MIPS: f64 = 10_000.0;
pub const SERVER_BANDWIDTH_BPS: f64 = 1_000_000.0;
pub const SERVER_RAM_MB: u64 = 302_768;

/// Placement preference carried by an application request.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Requirement {
    DeadlineAware,
    EnergyAware,
    Hybrid,
    /// Unrecognised requirement value; allocation answers with the
    /// none-decision instead of a device.
    Unknown,
}

/// Unit of submitted work. Subtasks execute back to back on whichever
/// device the task lands on.
#[derive(Debug, Clone)]
pub struct Task {
    pub task_id: u32,
    pub length_mi: f64,
    pub data_size_b: u64,
    pub subtasks: Vec<f64>,
}

impl Task {
    /// Even split of `length_mi` into `subtask_mi`-sized pieces.
    pub fn with_even_subtasks(task_id: u32, length_mi: f64, subtask_mi: f64, data_size_b: u64) -> Self {
        let n = (length_mi / subtask_mi).round().max(1.0) as usize;
        Task {
            task_id,
            length_mi,
            data_size_b,
            subtasks: vec![length_mi / n as f64; n],
        }
    }
}

/// One user submission: an ordered bundle of tasks under a single deadline.
#[derive(Debug, Clone)]
pub struct ApplicationRequest {
    pub app_id: u32,
    pub submit_time_s: f64,
    pub tasks: Vec<Task>,
    /// Absolute deadline; `deadline_s - submit_time_s` is the agreed response.
    pub deadline_s: f64,
    pub requirement: Requirement,
}

impl ApplicationRequest {
    pub fn agreed_response_s(&self) -> f64 {
        self.deadline_s - self.submit_time_s
    }
}

/// One observed (predictors, outcomes) row produced when a task completes.
///
/// Predictor fields hold what the allocator saw at decision time;
/// `exec_time_s` and `energy_consumed_j` are the measured outcomes.
/// `exec_time_s` doubles as a predictor for the energy model.
#[derive(Debug, Clone)]
pub struct TelemetryRecord {
    pub device_id: u32,
    pub cpu_utilization: f64,
    pub mobility_m: f64,
    pub net_comm_s: f64,
    pub response_time_s: f64,
    /// Dichotomous: 1.0 when the battery could cover the predicted load.
    pub power_available: f64,
    pub energy_usage_j: f64,
    pub exec_time_s: f64,
    pub energy_consumed_j: f64,
}

/// Default-configuration ranges checked by [`validate_device`].
pub const DEFAULT_MIPS_RANGE: (f64, f64) = (2_000.0, 6_000.0);
pub const DEFAULT_DISTANCE_RANGE_M: (f64, f64) = (5.0, 40.0);
pub const DEFAULT_BATTERY_RANGE: (f64, f64) = (0.20, 0.90);

/// Outcome of a device validation pass. Violations are data, not faults.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidationResult {
    pub violations: Vec<&'static str>,
}

impl ValidationResult {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks a battery device against the default-configuration invariants and
/// returns the names of any it breaks.
pub fn validate_device(dev: &FogDevice) -> ValidationResult {
    let mut violations = Vec::new();
    if dev.mips_capacity < DEFAULT_MIPS_RANGE.0 || dev.mips_capacity > DEFAULT_MIPS_RANGE.1 {
        violations.push("mips range");
    }
    if dev.distance_m < DEFAULT_DISTANCE_RANGE_M.0 || dev.distance_m > DEFAULT_DISTANCE_RANGE_M.1 {
        violations.push("distance range");
    }
    if dev.battery_pct < DEFAULT_BATTERY_RANGE.0 || dev.battery_pct > DEFAULT_BATTERY_RANGE.1 {
        violations.push("battery initial range");
    }
    if dev.power_idle_w >= dev.power_max_w {
        violations.push("power ordering");
    }
    if dev.battery_capacity_j <= 0.0 {
        violations.push("battery capacity positive");
    }
    ValidationResult { violations }
}
