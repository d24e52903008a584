//! Deterministic discrete-event engine: application arrivals, allocation,
//! task execution under fluctuating CPU availability, battery drain with
//! depletion and one retry, telemetry emission and periodic retraining.
//!
//! All randomness flows from seeded ChaCha streams and events are processed
//! in (time, seq) order, so a scenario plus a seed reproduces a run exactly.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::alloc::{
    allocate_scored, baseline_power_min, score_all, AllocParams, AllocationDecision, Candidate,
    ModelSet, Policy,
};
use crate::domain::{ApplicationRequest, FogDevice, Requirement, Task, TelemetryRecord};
use crate::energy::{drain_battery, energy_over, power_at, PowerModel};
use crate::metrics::{aggregate, CompletedTask, CostRates, RunReport};
use crate::regression::{cold_start_model, fit, fit_pruned, RegressionError, Schema, TrainingWindow};
use crate::trace::UtilizationTrace;

/// Stable derivation of per-stream seeds from the master run seed.
pub fn derive_seed(master: u64, stream: u64) -> u64 {
    let mut z = master ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Error, PartialEq)]
pub enum SimError {
    #[error("invalid scenario: {0}")]
    Config(String),
    #[error("event cap of {cap} exceeded; simulation aborted as non-terminating")]
    DiagnosticAbort { cap: u64 },
}

/// Engine tunables. Ranges come from the default device configuration
/// tables; the rest are documented artifact choices.
#[derive(Debug, Clone, PartialEq)]
pub struct SimParams {
    /// Per-task CPU availability multiplier range.
    pub availability_range: (f64, f64),
    /// Utilization increase during execution, capped so total stays <= 1.
    pub exec_variation_range: (f64, f64),
    pub safety_margin: f64,
    pub hybrid_weight: f64,
    pub window_capacity: usize,
    /// Refit the models after this many task completions.
    pub retrain_interval: usize,
    pub event_cap: u64,
    /// Nominal task length used by the cold-start model.
    pub task_length_mi: f64,
    /// Arrival horizon; idle energy is settled at least this far.
    pub horizon_s: f64,
    pub sla_alpha: f64,
    pub sla_beta: f64,
    pub cost_rates: CostRates,
}

impl Default for SimParams {
    fn default() -> Self {
        SimParams {
            availability_range: (0.50, 1.30),
            exec_variation_range: (0.10, 0.40),
            safety_margin: crate::energy::DEFAULT_SAFETY_MARGIN,
            hybrid_weight: 0.5,
            window_capacity: crate::regression::DEFAULT_WINDOW_CAPACITY,
            retrain_interval: 25,
            event_cap: 10_000_000,
            task_length_mi: 3000.0,
            horizon_s: 3600.0,
            sla_alpha: 1.0,
            sla_beta: 0.5,
            cost_rates: CostRates::default(),
        }
    }
}

/// Everything a single seeded run needs.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub devices: Vec<FogDevice>,
    pub traces: Vec<UtilizationTrace>,
    pub apps: Vec<ApplicationRequest>,
    pub policy: Policy,
    pub seed: u64,
    pub params: SimParams,
}

/// MIPS actually delivered under an availability multiplier.
pub fn effective_mips(dev: &FogDevice, availability: f64) -> f64 {
    dev.mips_capacity * availability
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ServiceTime {
    pub compute_s: f64,
    pub transfer_s: f64,
}

impl ServiceTime {
    pub fn total_s(&self) -> f64 {
        self.compute_s + self.transfer_s
    }
}

/// Subtask-by-subtask compute time at the drawn availability, plus the
/// input transfer over the device link.
pub fn task_service_time(task: &Task, dev: &FogDevice, availability: f64) -> ServiceTime {
    let mips = effective_mips(dev, availability);
    let compute_s = task.subtasks.iter().map(|mi| mi / mips).sum();
    let transfer_s = task.data_size_b as f64 * 8.0 / dev.bandwidth_bps;
    ServiceTime { compute_s, transfer_s }
}

/// Simulation event kinds, processed in (time, seq) order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Event {
    AppArrival { app_idx: usize },
    TaskStart { app_idx: usize, task_idx: usize },
    TaskComplete { app_idx: usize, task_idx: usize },
    DeviceDepleted { device_idx: usize, app_idx: usize, task_idx: usize, retried: bool },
    RetrainModels,
}

#[derive(Debug, Clone, Copy)]
struct Scheduled {
    time_s: f64,
    seq: u64,
    event: Event,
}

impl PartialEq for Scheduled {
    fn eq(&self, other: &Self) -> bool {
        self.time_s == other.time_s && self.seq == other.seq
    }
}
impl Eq for Scheduled {}
impl PartialOrd for Scheduled {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Scheduled {
    fn cmp(&self, other: &Self) -> Ordering {
        // BinaryHeap is a max-heap; reverse for earliest-first.
        other
            .time_s
            .total_cmp(&self.time_s)
            .then(other.seq.cmp(&self.seq))
    }
}

/// One completed task with everything needed to recompute its metrics and
/// energy offline.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskOutcome {
    pub app_id: u32,
    pub task_id: u32,
    pub device_id: u32,
    pub submit_s: f64,
    pub alloc_s: f64,
    pub start_s: f64,
    pub end_s: f64,
    pub exec_variation: f64,
    pub energy_j: f64,
    pub agreed_response_s: f64,
    pub retried: bool,
}

/// Telemetry row plus its emission time (the task completion).
#[derive(Debug, Clone)]
pub struct TimedTelemetry {
    pub time_s: f64,
    pub record: TelemetryRecord,
}

/// A logged decision with enough context to replay it.
#[derive(Debug, Clone)]
pub struct DecisionRecord {
    pub time_s: f64,
    pub app_id: u32,
    pub candidates: Vec<Candidate>,
    pub model_epoch: usize,
    pub decision: AllocationDecision,
}

/// Per-device energy ledger for a run.
#[derive(Debug, Clone, PartialEq)]
pub struct DeviceSummary {
    pub device_id: u32,
    pub trace_id: usize,
    pub mains: bool,
    pub idle_energy_j: f64,
    pub task_energy_j: f64,
    /// Energy sunk into executions that died with the battery.
    pub partial_task_energy_j: f64,
    /// Window of the execution that depleted the battery, when one did.
    pub partial_window_s: Option<(f64, f64)>,
    pub total_energy_j: f64,
    pub battery_pct_final: f64,
    pub depleted_at_s: Option<f64>,
}

/// Full output of one seeded run.
#[derive(Debug, Clone)]
pub struct RunArtifacts {
    pub report: RunReport,
    pub tasks: Vec<TaskOutcome>,
    pub telemetry: Vec<TimedTelemetry>,
    pub decisions: Vec<DecisionRecord>,
    pub model_history: Vec<ModelSet>,
    pub device_summaries: Vec<DeviceSummary>,
    pub total_tasks: usize,
    pub tasks_failed: usize,
    pub end_time_s: f64,
    pub events_processed: u64,
}

struct DeviceState {
    dev: FogDevice,
    power: PowerModel,
    trace: UtilizationTrace,
    busy_until_s: f64,
    /// Energy is accounted up to here; prepaid through committed executions.
    settled_until_s: f64,
    idle_energy_j: f64,
    task_energy_j: f64,
    partial_task_energy_j: f64,
    partial_window_s: Option<(f64, f64)>,
    depleted_at_s: Option<f64>,
    last_transfer_s: f64,
    last_wait_s: f64,
    /// Smoothed per-task energy profile of this device (EWMA), 0 until the
    /// first completion.
    energy_profile_j: f64,
}

impl DeviceState {
    fn alive(&self) -> bool {
        self.depleted_at_s.is_none()
    }

    fn total_energy_j(&self) -> f64 {
        self.idle_energy_j + self.task_energy_j + self.partial_task_energy_j
    }
}

/// Walks the trace segments in `[t0, t1)` until accumulated energy reaches
/// `target_j`; returns the crossing time. Caller guarantees the window holds
/// at least `target_j`.
fn time_energy_reached(
    model: &PowerModel,
    trace: &UtilizationTrace,
    t0: f64,
    t1: f64,
    target_j: f64,
) -> f64 {
    let interval = trace.sample_interval_s;
    let mut cum = 0.0;
    let mut seg = (t0 / interval).floor();
    loop {
        let seg_start = seg * interval;
        if seg_start >= t1 {
            return t1;
        }
        let lo = seg_start.max(t0);
        let hi = (seg_start + interval).min(t1);
        if hi > lo {
            let u = trace.samples[(seg as u64 % trace.samples.len() as u64) as usize];
            let p = power_at(model, u).expect("trace samples are valid utilizations");
            let seg_e = p * (hi - lo);
            if cum + seg_e >= target_j {
                return (lo + (target_j - cum) / p).min(t1);
            }
            cum += seg_e;
        }
        seg += 1.0;
    }
}

struct PendingExec {
    device_idx: usize,
    alloc_s: f64,
    start_s: f64,
    availability: f64,
    exec_variation: f64,
    transfer_s: f64,
    energy_j: f64,
    features: Candidate,
    power_avail_flag: f64,
    retried: bool,
}

struct Engine<'a> {
    scenario: &'a Scenario,
    devices: Vec<DeviceState>,
    device_index: BTreeMap<u32, usize>,
    queue: BinaryHeap<Scheduled>,
    seq: u64,
    exec_rng: ChaCha8Rng,
    window: TrainingWindow,
    models: Vec<ModelSet>,
    pending: BTreeMap<(usize, usize), PendingExec>,
    alloc_params: AllocParams,
    tasks: Vec<TaskOutcome>,
    telemetry: Vec<TimedTelemetry>,
    decisions: Vec<DecisionRecord>,
    completions: usize,
    failed: usize,
    end_time_s: f64,
}

impl<'a> Engine<'a> {
    fn push(&mut self, time_s: f64, event: Event) {
        self.seq += 1;
        self.queue.push(Scheduled { time_s, seq: self.seq, event });
    }

    fn models_epoch(&self) -> usize {
        self.models.len() - 1
    }

    fn current_models(&self) -> &ModelSet {
        self.models.last().expect("cold models seeded at init")
    }

    /// Brings the device's energy ledger up to `now`, draining idle energy
    /// from the battery. May discover an idle depletion.
    fn settle(&mut self, device_idx: usize, now: f64) {
        let d = &mut self.devices[device_idx];
        if !d.alive() || now <= d.settled_until_s {
            return;
        }
        let idle = energy_over(&d.power, &d.trace, d.settled_until_s, now)
            .expect("settle window is ordered");
        let reserve = d.dev.remaining_energy_j();
        if idle >= reserve && !d.dev.is_mains() {
            let at = time_energy_reached(&d.power, &d.trace, d.settled_until_s, now, reserve);
            d.idle_energy_j += reserve;
            drain_battery(&mut d.dev, reserve);
            d.dev.battery_pct = 0.0; // the whole reserve is spent
            d.depleted_at_s = Some(at);
            d.settled_until_s = at;
        } else {
            d.idle_energy_j += idle;
            drain_battery(&mut d.dev, idle);
            d.settled_until_s = now;
        }
    }

    /// Feature snapshots of every live device at `now`.
    fn build_candidates(&mut self, now: f64) -> Vec<Candidate> {
        for idx in 0..self.devices.len() {
            self.settle(idx, now);
        }
        self.devices
            .iter()
            .filter(|d| d.alive())
            .map(|d| {
                let cpu = d.trace.sample(now);
                Candidate {
                    device_id: d.dev.id,
                    cpu_utilization: cpu,
                    mobility_m: d.dev.distance_m,
                    net_comm_s: d.last_transfer_s,
                    response_time_s: d.last_wait_s,
                    energy_usage_j: d.energy_profile_j,
                    remaining_energy_j: d.dev.remaining_energy_j(),
                    current_power_w: power_at(&d.power, cpu).expect("trace sample in range"),
                }
            })
            .collect()
    }

    /// Allocates and commits tasks of `app` starting at `task_idx`. Tasks
    /// that cannot be placed at all are failed and the next one is tried
    /// immediately, so the loop always makes progress.
    fn dispatch_task(&mut self, app_idx: usize, mut task_idx: usize, now: f64, retried: bool) {
        let app = &self.scenario.apps[app_idx];
        let mut retried = retried;
        while task_idx < app.tasks.len() {
            let candidates = self.build_candidates(now);
            let placement = self.place(&candidates, app.app_id, app.requirement, now);
            match placement {
                Some((chosen_id, pa_flag)) => {
                    let features = candidates
                        .iter()
                        .find(|c| c.device_id == chosen_id)
                        .expect("decision picks a candidate")
                        .clone();
                    self.commit(app_idx, task_idx, now, features, pa_flag, retried);
                    return;
                }
                None => {
                    self.failed += 1;
                    task_idx += 1;
                    retried = false;
                }
            }
        }
    }

    /// Runs the policy over the candidate set, logs the decision, and
    /// returns the chosen device with its resolved power-availability flag.
    fn place(
        &mut self,
        candidates: &[Candidate],
        app_id: u32,
        requirement: Requirement,
        now: f64,
    ) -> Option<(u32, f64)> {
        if candidates.is_empty() {
            return None;
        }
        let (decision, pa_by_id) = if self.scenario.policy == Policy::BaselinePowerMin {
            (baseline_power_min(candidates, app_id, now).ok()?, Vec::new())
        } else {
            let scores = score_all(candidates, self.current_models(), &self.alloc_params).ok()?;
            let pa: Vec<(u32, bool)> = scores.iter().map(|s| (s.device_id, s.power_available)).collect();
            let decision = allocate_scored(&scores, app_id, requirement, &self.alloc_params, now).ok()?;
            (decision, pa)
        };
        self.decisions.push(DecisionRecord {
            time_s: now,
            app_id,
            candidates: candidates.to_vec(),
            model_epoch: self.models_epoch(),
            decision: decision.clone(),
        });
        let chosen_id = decision.chosen_device_id?;
        let pa_flag = pa_by_id
            .iter()
            .find(|(id, _)| *id == chosen_id)
            .map(|(_, pa)| *pa as u8 as f64)
            .unwrap_or(1.0);
        Some((chosen_id, pa_flag))
    }

    /// Books the task on the chosen device: draws availability and execution
    /// variation, prepays the energy, and schedules start/complete or the
    /// depletion event if the battery cannot cover the execution.
    fn commit(
        &mut self,
        app_idx: usize,
        task_idx: usize,
        now: f64,
        features: Candidate,
        power_avail_flag: f64,
        retried: bool,
    ) {
        let device_idx = self.device_index[&features.device_id];
        let task = &self.scenario.apps[app_idx].tasks[task_idx];

        let (a_lo, a_hi) = self.scenario.params.availability_range;
        let (v_lo, v_hi) = self.scenario.params.exec_variation_range;
        let availability = self.exec_rng.gen_range(a_lo..=a_hi);
        let exec_variation = self.exec_rng.gen_range(v_lo..=v_hi);

        let d = &mut self.devices[device_idx];
        let start = now.max(d.busy_until_s);
        let wait = start - now;
        d.last_wait_s = wait;

        let service = task_service_time(task, &d.dev, availability);
        let end = start + service.total_s();

        // Execution raises utilization on top of the background trace.
        let loaded = d.trace.with_load(exec_variation);
        let energy = energy_over(&d.power, &loaded, start, end).expect("execution window ordered");

        let reserve = d.dev.remaining_energy_j();
        if energy >= reserve && !d.dev.is_mains() {
            // The battery dies mid-execution; the task fails at the moment
            // the reserve runs out, and the device leaves the candidate pool
            // immediately since all its remaining energy is committed.
            let at = time_energy_reached(&d.power, &loaded, start, end, reserve);
            d.partial_task_energy_j += reserve;
            d.partial_window_s = Some((start, at));
            drain_battery(&mut d.dev, reserve);
            d.dev.battery_pct = 0.0; // the whole reserve is spent
            d.depleted_at_s = Some(at);
            d.busy_until_s = at;
            d.settled_until_s = at;
            self.push(at, Event::DeviceDepleted { device_idx, app_idx, task_idx, retried });
            return;
        }

        drain_battery(&mut d.dev, energy);
        d.task_energy_j += energy;
        d.busy_until_s = end;
        d.settled_until_s = end;

        self.pending.insert(
            (app_idx, task_idx),
            PendingExec {
                device_idx,
                alloc_s: now,
                start_s: start,
                availability,
                exec_variation,
                transfer_s: service.transfer_s,
                energy_j: energy,
                features,
                power_avail_flag,
                retried,
            },
        );
        self.push(start, Event::TaskStart { app_idx, task_idx });
        self.push(end, Event::TaskComplete { app_idx, task_idx });
    }

    fn on_task_complete(&mut self, app_idx: usize, task_idx: usize, now: f64) {
        let exec = self.pending.remove(&(app_idx, task_idx)).expect("completion has a pending exec");
        let app = &self.scenario.apps[app_idx];
        let task = &app.tasks[task_idx];

        {
            let d = &mut self.devices[exec.device_idx];
            d.last_transfer_s = exec.transfer_s;
            d.energy_profile_j = 0.25 * exec.energy_j + 0.75 * d.energy_profile_j;
        }

        // Time from allocation to completion: queue wait plus service. A
        // deadline cares about the whole span, so this is what the
        // execution-time model learns to predict.
        let exec_time = now - exec.alloc_s;
        self.telemetry.push(TimedTelemetry {
            time_s: now,
            record: TelemetryRecord {
                device_id: self.devices[exec.device_idx].dev.id,
                cpu_utilization: exec.features.cpu_utilization,
                mobility_m: exec.features.mobility_m,
                net_comm_s: exec.features.net_comm_s,
                response_time_s: exec.features.response_time_s,
                power_available: exec.power_avail_flag,
                energy_usage_j: exec.features.energy_usage_j,
                exec_time_s: exec_time,
                energy_consumed_j: exec.energy_j,
            },
        });
        self.window.push(self.telemetry.last().unwrap().record.clone());

        self.tasks.push(TaskOutcome {
            app_id: app.app_id,
            task_id: task.task_id,
            device_id: self.devices[exec.device_idx].dev.id,
            submit_s: app.submit_time_s,
            alloc_s: exec.alloc_s,
            start_s: exec.start_s,
            end_s: now,
            exec_variation: exec.exec_variation,
            energy_j: exec.energy_j,
            agreed_response_s: app.agreed_response_s(),
            retried: exec.retried,
        });

        self.completions += 1;
        if self.completions.is_multiple_of(self.scenario.params.retrain_interval) {
            self.push(now, Event::RetrainModels);
        }

        self.dispatch_task(app_idx, task_idx + 1, now, false);
    }

    fn refit(&self, schema: Schema, previous: &crate::regression::RegressionModel) -> crate::regression::RegressionModel {
        match fit(&self.window, schema) {
            Ok(m) => m,
            Err(RegressionError::RankDeficient) => {
                fit_pruned(&self.window, schema).unwrap_or_else(|_| previous.clone())
            }
            Err(_) => previous.clone(),
        }
    }

    fn on_retrain(&mut self) {
        let prev = self.current_models().clone();
        let exec_time = self.refit(Schema::ExecTimeFull, &prev.exec_time);
        let energy = self.refit(Schema::EnergyFull, &prev.energy);
        self.models.push(ModelSet { exec_time, energy });
    }
}

/// Runs the scenario to completion and returns the report plus all logs.
pub fn run(scenario: &Scenario) -> Result<RunArtifacts, SimError> {
    if scenario.devices.is_empty() {
        return Err(SimError::Config("at least one device is required".into()));
    }
    let mut device_index = BTreeMap::new();
    for (idx, dev) in scenario.devices.iter().enumerate() {
        if device_index.insert(dev.id, idx).is_some() {
            return Err(SimError::Config(format!("duplicate device id {}", dev.id)));
        }
        if dev.trace_id >= scenario.traces.len() {
            return Err(SimError::Config(format!(
                "device {} references missing trace {}",
                dev.id, dev.trace_id
            )));
        }
        if dev.power_idle_w >= dev.power_max_w || dev.power_idle_w < 0.0 {
            return Err(SimError::Config(format!("device {} has an invalid power model", dev.id)));
        }
    }

    let devices: Vec<DeviceState> = scenario
        .devices
        .iter()
        .map(|dev| DeviceState {
            power: PowerModel::new(dev.power_idle_w, dev.power_max_w),
            trace: scenario.traces[dev.trace_id].clone(),
            dev: dev.clone(),
            busy_until_s: 0.0,
            settled_until_s: 0.0,
            idle_energy_j: 0.0,
            task_energy_j: 0.0,
            partial_task_energy_j: 0.0,
            partial_window_s: None,
            depleted_at_s: None,
            last_transfer_s: 0.0,
            last_wait_s: 0.0,
            // Spec-sheet prior: idle power times the nominal task time at
            // rated MIPS. Observed energies blend it away.
            energy_profile_j: dev.power_idle_w * scenario.params.task_length_mi
                / dev.mips_capacity.max(1.0),
        })
        .collect();

    let cold = ModelSet {
        exec_time: cold_start_model(Schema::ExecTimeFull, &scenario.devices, scenario.params.task_length_mi),
        energy: cold_start_model(Schema::EnergyFull, &scenario.devices, scenario.params.task_length_mi),
    };

    let mut engine = Engine {
        scenario,
        devices,
        device_index,
        queue: BinaryHeap::new(),
        seq: 0,
        exec_rng: ChaCha8Rng::seed_from_u64(derive_seed(scenario.seed, 0x45584543)),
        window: TrainingWindow::new(scenario.params.window_capacity),
        models: vec![cold],
        pending: BTreeMap::new(),
        alloc_params: AllocParams {
            hybrid_weight: scenario.params.hybrid_weight,
            safety_margin: scenario.params.safety_margin,
        },
        tasks: Vec::new(),
        telemetry: Vec::new(),
        decisions: Vec::new(),
        completions: 0,
        failed: 0,
        end_time_s: 0.0,
    };

    for (app_idx, app) in scenario.apps.iter().enumerate() {
        if app.submit_time_s < 0.0 || app.deadline_s <= app.submit_time_s {
            return Err(SimError::Config(format!("app {} has an invalid deadline", app.app_id)));
        }
        engine.push(app.submit_time_s, Event::AppArrival { app_idx });
    }

    let mut processed: u64 = 0;
    let mut last_time = 0.0f64;
    while let Some(scheduled) = engine.queue.pop() {
        processed += 1;
        if processed > scenario.params.event_cap {
            return Err(SimError::DiagnosticAbort { cap: scenario.params.event_cap });
        }
        debug_assert!(scheduled.time_s >= last_time, "time went backwards");
        last_time = scheduled.time_s;
        let now = scheduled.time_s;
        match scheduled.event {
            Event::AppArrival { app_idx } => engine.dispatch_task(app_idx, 0, now, false),
            Event::TaskStart { app_idx, task_idx } => {
                if let Some(exec) = engine.pending.get(&(app_idx, task_idx)) {
                    let avail = exec.availability;
                    engine.devices[exec.device_idx].dev.cpu_availability_factor = avail;
                }
            }
            Event::TaskComplete { app_idx, task_idx } => engine.on_task_complete(app_idx, task_idx, now),
            Event::DeviceDepleted { device_idx: _, app_idx, task_idx, retried } => {
                // One retry per depletion-failed task, then move on.
                if retried {
                    engine.failed += 1;
                    engine.dispatch_task(app_idx, task_idx + 1, now, false);
                } else {
                    engine.dispatch_task(app_idx, task_idx, now, true);
                }
            }
            Event::RetrainModels => engine.on_retrain(),
        }
    }
    engine.end_time_s = last_time.max(scenario.params.horizon_s);

    // Settle the idle tail of every device out to the end of the run.
    for idx in 0..engine.devices.len() {
        let end = engine.end_time_s;
        engine.settle(idx, end);
    }

    let completed: Vec<CompletedTask> = engine
        .tasks
        .iter()
        .map(|t| CompletedTask {
            app_submit_s: t.submit_s,
            task_submit_s: t.alloc_s,
            exec_start_s: t.start_s,
            exec_end_s: t.end_s,
            energy_j: t.energy_j,
            agreed_response_s: t.agreed_response_s,
        })
        .collect();
    let report = aggregate(
        &completed,
        engine.failed,
        scenario.params.sla_alpha,
        scenario.params.sla_beta,
        &scenario.params.cost_rates,
    );

    let device_summaries = engine
        .devices
        .iter()
        .map(|d| DeviceSummary {
            device_id: d.dev.id,
            trace_id: d.dev.trace_id,
            mains: d.dev.is_mains(),
            idle_energy_j: d.idle_energy_j,
            task_energy_j: d.task_energy_j,
            partial_task_energy_j: d.partial_task_energy_j,
            partial_window_s: d.partial_window_s,
            total_energy_j: d.total_energy_j(),
            battery_pct_final: d.dev.battery_pct,
            depleted_at_s: d.depleted_at_s,
        })
        .collect();

    let total_tasks = scenario.apps.iter().map(|a| a.tasks.len()).sum();
    Ok(RunArtifacts {
        report,
        tasks: engine.tasks,
        telemetry: engine.telemetry,
        decisions: engine.decisions,
        model_history: engine.models,
        device_summaries,
        total_tasks,
        tasks_failed: engine.failed,
        end_time_s: engine.end_time_s,
        events_processed: processed,
    })
}

/// Telemetry log in the documented CSV schema.
pub fn telemetry_csv(artifacts: &RunArtifacts) -> String {
    let mut out = String::from("time_s,device_id,cpu_util,mobility_m,netcomm_s,resptime_s,power_avail,energy_j,exec_s\n");
    for t in &artifacts.telemetry {
        let r = &t.record;
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            t.time_s,
            r.device_id,
            r.cpu_utilization,
            r.mobility_m,
            r.net_comm_s,
            r.response_time_s,
            r.power_available,
            r.energy_consumed_j,
            r.exec_time_s
        ));
    }
    out
}

/// Decision log in the documented CSV schema.
pub fn decisions_csv(artifacts: &RunArtifacts) -> String {
    let mut out = String::from("time_s,app_id,policy,device_id,etp_s,eec_j,filtered_fallback\n");
    for d in &artifacts.decisions {
        let dec = &d.decision;
        let fmt_opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            d.time_s,
            d.app_id,
            dec.policy.map(|p| p.name()).unwrap_or("none"),
            dec.chosen_device_id.map(|id| id.to_string()).unwrap_or_default(),
            fmt_opt(dec.predicted_exec_s),
            fmt_opt(dec.predicted_energy_j),
            dec.filtered_fallback
        ));
    }
    out
}
