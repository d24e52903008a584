//! Builds seeded scenarios from a config and drives single runs and the two
//! sweep presets.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use fogsim_core::domain::{ApplicationRequest, FogDevice, PowerSource, Task};
use fogsim_core::metrics::{report_csv_row, CostRates, REPORT_CSV_HEADER};
use fogsim_core::sim::{derive_seed, run, RunArtifacts, Scenario, SimParams};
use fogsim_core::trace::{assign_traces, parse_trace, synth_trace, UtilizationTrace};
use fogsim_core::Policy;

use crate::config::ScenarioConfig;
use crate::CliError;

// Stream tags for the per-seed random state.
const STREAM_FLEET: u64 = 1;
const STREAM_WORKLOAD: u64 = 2;
const STREAM_ASSIGN: u64 = 3;
const STREAM_TRACE_BASE: u64 = 1000;

/// Environment variable overriding the trace source directory.
pub const TRACE_DIR_ENV: &str = "FOGSIM_TRACE_DIR";

/// Loads the trace pool: PlanetLab files when a directory is configured
/// (env var takes precedence), synthetic traces otherwise.
pub fn load_traces(cfg: &ScenarioConfig, seed: u64) -> Result<Vec<UtilizationTrace>, CliError> {
    let dir = std::env::var(TRACE_DIR_ENV).unwrap_or_else(|_| cfg.trace_dir.clone());
    if dir.is_empty() {
        let n = cfg.trace_count;
        return (0..n)
            .map(|i| {
                let span = cfg.trace_mean_max - cfg.trace_mean_min;
                let frac = if n > 1 { i as f64 / (n - 1) as f64 } else { 0.0 };
                let mean = cfg.trace_mean_min + span * frac;
                let mut t = synth_trace(
                    derive_seed(seed, STREAM_TRACE_BASE + i as u64),
                    cfg.trace_len,
                    mean,
                    cfg.trace_jitter,
                )
                .map_err(|e| CliError::Run(format!("synthetic trace {i}: {e}")))?;
                t.trace_id = i;
                t.sample_interval_s = cfg.trace_interval_s;
                Ok(t)
            })
            .collect();
    }

    let mut paths: Vec<_> = std::fs::read_dir(&dir)
        .map_err(|e| CliError::Run(format!("trace dir {dir}: {e}")))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.is_file())
        .collect();
    paths.sort();
    let mut traces = Vec::new();
    for path in paths {
        let text = std::fs::read_to_string(&path)
            .map_err(|e| CliError::Run(format!("trace {}: {e}", path.display())))?;
        let mut t = parse_trace(&text)
            .map_err(|e| CliError::Run(format!("trace {}: {e}", path.display())))?;
        t.trace_id = traces.len();
        traces.push(t);
    }
    if traces.is_empty() {
        return Err(CliError::Run(format!("trace dir {dir} holds no parseable traces")));
    }
    Ok(traces)
}

/// Materializes the fleet, traces and workload for one (policy, seed) run.
pub fn build_scenario(cfg: &ScenarioConfig, policy: Policy, seed: u64) -> Result<Scenario, CliError> {
    let traces = load_traces(cfg, seed)?;

    let mut fleet_rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, STREAM_FLEET));
    let mut devices = Vec::with_capacity(cfg.n_devices + cfg.n_servers);
    for id in 0..cfg.n_devices {
        devices.push(FogDevice {
            id: id as u32,
            mips_capacity: fleet_rng.gen_range(cfg.device_mips_min..=cfg.device_mips_max),
            bandwidth_bps: cfg.device_bandwidth_bps,
            ram_mb: cfg.device_ram_mb,
            distance_m: fleet_rng.gen_range(cfg.distance_min_m..=cfg.distance_max_m),
            battery_pct: fleet_rng.gen_range(cfg.battery_min_pct..=cfg.battery_max_pct),
            cpu_availability_factor: 1.0,
            trace_id: 0,
            power_idle_w: cfg.power_idle_w,
            power_max_w: cfg.power_max_w,
            battery_capacity_j: cfg.battery_capacity_j,
            power_source: PowerSource::Battery,
        });
    }
    for s in 0..cfg.n_servers {
        devices.push(FogDevice {
            id: (cfg.n_devices + s) as u32,
            mips_capacity: cfg.server_mips,
            bandwidth_bps: cfg.server_bandwidth_bps,
            ram_mb: cfg.server_ram_mb,
            distance_m: fleet_rng.gen_range(cfg.distance_min_m..=cfg.distance_max_m),
            battery_pct: 1.0,
            cpu_availability_factor: 1.0,
            trace_id: 0,
            power_idle_w: cfg.server_power_idle_w,
            power_max_w: cfg.server_power_max_w,
            battery_capacity_j: cfg.battery_capacity_j,
            power_source: PowerSource::Mains,
        });
    }
    let assignment = assign_traces(&devices, &traces, derive_seed(seed, STREAM_ASSIGN))
        .map_err(|e| CliError::Run(e.to_string()))?;
    for (device_id, trace_id) in assignment {
        devices.iter_mut().find(|d| d.id == device_id).unwrap().trace_id = trace_id;
    }

    let mut wl_rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, STREAM_WORKLOAD));
    let mut submits: Vec<f64> = (0..cfg.n_apps).map(|_| wl_rng.gen_range(0.0..cfg.horizon_s)).collect();
    submits.sort_by(f64::total_cmp);

    // Expected single-task service over the configured device and
    // availability distributions, used to scale the per-application deadline.
    // E[1/X] for X ~ U[lo, hi] is ln(hi/lo) / (hi - lo).
    let mean_reciprocal = |lo: f64, hi: f64| if hi > lo { (hi / lo).ln() / (hi - lo) } else { 1.0 / lo };
    let mean_data = (cfg.data_size_min_b + cfg.data_size_max_b) as f64 / 2.0;
    let est_task_s = cfg.task_length_mi
        * mean_reciprocal(cfg.device_mips_min, cfg.device_mips_max)
        * mean_reciprocal(cfg.availability_min, cfg.availability_max)
        + mean_data * 8.0 / cfg.device_bandwidth_bps;
    let est_app_s = cfg.tasks_per_app as f64 * est_task_s;

    let apps: Vec<ApplicationRequest> = submits
        .iter()
        .enumerate()
        .map(|(i, &submit)| {
            let tasks: Vec<Task> = (0..cfg.tasks_per_app)
                .map(|t| {
                    let data = wl_rng.gen_range(cfg.data_size_min_b..=cfg.data_size_max_b);
                    Task::with_even_subtasks(t as u32, cfg.task_length_mi, cfg.subtask_length_mi, data)
                })
                .collect();
            let slack = wl_rng.gen_range(cfg.deadline_slack_min..=cfg.deadline_slack_max);
            let agreed = (est_app_s * (1.0 + slack)).max(cfg.min_deadline_slack_s);
            ApplicationRequest {
                app_id: i as u32,
                submit_time_s: submit,
                tasks,
                deadline_s: submit + agreed,
                requirement: policy.requirement(),
            }
        })
        .collect();

    Ok(Scenario {
        devices,
        traces,
        apps,
        policy,
        seed,
        params: SimParams {
            availability_range: (cfg.availability_min, cfg.availability_max),
            exec_variation_range: (cfg.exec_variation_min, cfg.exec_variation_max),
            safety_margin: cfg.safety_margin,
            hybrid_weight: cfg.hybrid_weight,
            window_capacity: cfg.window_capacity,
            retrain_interval: cfg.retrain_interval,
            event_cap: cfg.event_cap,
            task_length_mi: cfg.task_length_mi,
            horizon_s: cfg.horizon_s,
            sla_alpha: cfg.sla_alpha,
            sla_beta: cfg.sla_beta,
            cost_rates: CostRates {
                price_per_million_msgs: cfg.price_per_million_msgs,
                price_per_million_conn_min: cfg.price_per_million_conn_min,
                messages_per_task: 2.0,
            },
        },
    })
}

/// Runs one (policy, seed) combination of the config.
pub fn run_one(cfg: &ScenarioConfig, policy: Policy, seed: u64) -> Result<RunArtifacts, CliError> {
    let scenario = build_scenario(cfg, policy, seed)?;
    run(&scenario).map_err(|e| CliError::Run(format!("{}/seed {}: {e}", policy.name(), seed)))
}

/// The two experiment sweeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepPreset {
    /// 70..=560 applications in steps of 70, devices fixed.
    App,
    /// 10..=50 devices in steps of 10, applications fixed.
    Device,
}

impl SweepPreset {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "app" => Some(SweepPreset::App),
            "device" => Some(SweepPreset::Device),
            _ => None,
        }
    }

    pub fn points(&self) -> Vec<usize> {
        match self {
            SweepPreset::App => (1..=8).map(|k| 70 * k).collect(),
            SweepPreset::Device => (1..=5).map(|k| 10 * k).collect(),
        }
    }

    fn apply(&self, cfg: &ScenarioConfig, point: usize) -> ScenarioConfig {
        let mut c = cfg.clone();
        match self {
            SweepPreset::App => c.n_apps = point,
            SweepPreset::Device => c.n_devices = point,
        }
        c
    }
}

/// Runs every (point, policy, seed) combination of the sweep and returns the
/// report CSV. Combinations execute in parallel; row order is fixed as
/// (point, policy order in the config, seed) regardless of scheduling.
pub fn run_sweep(preset: SweepPreset, base: &ScenarioConfig) -> Result<String, CliError> {
    let combos: Vec<(usize, Policy, u64)> = preset
        .points()
        .into_iter()
        .flat_map(|point| {
            base.policies
                .iter()
                .flat_map(move |&policy| base.seeds.iter().map(move |&seed| (point, policy, seed)))
                .collect::<Vec<_>>()
        })
        .collect();

    let rows: Vec<Result<String, CliError>> = combos
        .par_iter()
        .map(|&(point, policy, seed)| {
            let cfg = preset.apply(base, point);
            let artifacts = run_one(&cfg, policy, seed)
                .map_err(|e| CliError::Run(format!("sweep point {point}: {e}")))?;
            Ok(report_csv_row(policy.name(), seed, cfg.n_devices, cfg.n_apps, &artifacts.report))
        })
        .collect();

    let mut csv = String::from(REPORT_CSV_HEADER);
    csv.push('\n');
    for row in rows {
        csv.push_str(&row?);
        csv.push('\n');
    }
    Ok(csv)
}
