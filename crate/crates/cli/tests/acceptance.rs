//! Acceptance suite: one test per release criterion, each printing the
//! measured values behind its verdict. Run with
//! `cargo test -p fogsim-cli --test acceptance -- --nocapture` to see them.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use fogsim_cli::{run_one, run_sweep, ScenarioConfig, SweepPreset};
use fogsim_core::alloc::{allocate, baseline_power_min, select_deadline, select_energy, select_hybrid, AllocParams, DeviceScore, Policy};
use fogsim_core::domain::{Requirement, TelemetryRecord};
use fogsim_core::energy::{energy_over, PowerModel};
use fogsim_core::metrics::{aggregate, CompletedTask, CostRates};
use fogsim_core::regression::{fit, Schema, TrainingWindow};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn app_sweep_csv() -> &'static str {
    static CSV: OnceLock<String> = OnceLock::new();
    CSV.get_or_init(|| run_sweep(SweepPreset::App, &ScenarioConfig::default()).expect("app sweep runs"))
}

fn device_sweep_csv() -> &'static str {
    static CSV: OnceLock<String> = OnceLock::new();
    CSV.get_or_init(|| run_sweep(SweepPreset::Device, &ScenarioConfig::default()).expect("device sweep runs"))
}

/// policy -> point -> per-metric mean over seeds.
fn curves(csv: &str, dim_col: usize) -> BTreeMap<String, BTreeMap<usize, BTreeMap<&'static str, f64>>> {
    let mut sums: BTreeMap<(String, usize), (f64, BTreeMap<&'static str, f64>)> = BTreeMap::new();
    for line in csv.lines().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        let policy = cells[0].to_string();
        let point: usize = cells[dim_col].parse().unwrap();
        let entry = sums.entry((policy, point)).or_insert_with(|| (0.0, BTreeMap::new()));
        entry.0 += 1.0;
        for (name, idx) in [("delay", 4), ("sla", 7), ("energy", 9)] {
            *entry.1.entry(name).or_insert(0.0) += cells[idx].parse::<f64>().unwrap();
        }
    }
    let mut out: BTreeMap<String, BTreeMap<usize, BTreeMap<&'static str, f64>>> = BTreeMap::new();
    for ((policy, point), (n, metric_sums)) in sums {
        let means = metric_sums.into_iter().map(|(k, v)| (k, v / n)).collect();
        out.entry(policy).or_default().insert(point, means);
    }
    out
}

fn sweep_mean(csv: &str, policy: &str, metric_idx: usize) -> f64 {
    let mut sum = 0.0;
    let mut n = 0.0;
    for line in csv.lines().skip(1) {
        let cells: Vec<&str> = line.split(',').collect();
        if cells[0] == policy {
            sum += cells[metric_idx].parse::<f64>().unwrap();
            n += 1.0;
        }
    }
    sum / n
}

/// Criterion 1: mean SLA-violation percentage over the application sweep
/// orders DeadlineAware < EnergyAware, and every regression policy beats the
/// power-minimizing baseline.
#[test]
fn acceptance_1_policy_ordering_on_sla() {
    let csv = app_sweep_csv();
    let da = sweep_mean(csv, "deadline_aware", 7);
    let ea = sweep_mean(csv, "energy_aware", 7);
    let hy = sweep_mean(csv, "hybrid", 7);
    let base = sweep_mean(csv, "baseline_power_min", 7);
    println!("criterion 1: SLA% deadline={da:.2} energy={ea:.2} hybrid={hy:.2} baseline={base:.2}");
    assert!(da < ea, "deadline-aware must beat energy-aware on SLA ({da:.2} vs {ea:.2})");
    assert!(da < base && ea < base && hy < base, "every regression policy must beat the baseline");
}

fn count_inversions(values: &[f64], want_non_decreasing: bool) -> usize {
    values
        .windows(2)
        .filter(|w| if want_non_decreasing { w[1] < w[0] } else { w[1] > w[0] })
        .count()
}

/// Criterion 2: mean delay is non-decreasing in the number of applications
/// and mean SLA violation is non-increasing in the number of devices, with
/// at most one adjacent-pair inversion per curve.
#[test]
fn acceptance_2_scaling_trends() {
    let app = curves(app_sweep_csv(), 3);
    for (policy, points) in &app {
        let delays: Vec<f64> = points.values().map(|m| m["delay"]).collect();
        let inv = count_inversions(&delays, true);
        println!("criterion 2: {policy} delay curve {delays:?} inversions={inv}");
        assert!(inv <= 1, "{policy} delay curve has {inv} inversions: {delays:?}");
    }
    let dev = curves(device_sweep_csv(), 2);
    for (policy, points) in &dev {
        let slas: Vec<f64> = points.values().map(|m| m["sla"]).collect();
        let inv = count_inversions(&slas, false);
        println!("criterion 2: {policy} sla curve {slas:?} inversions={inv}");
        assert!(inv <= 1, "{policy} SLA curve has {inv} inversions: {slas:?}");
    }
}

// Independent oracle for criterion 3: explicit (X^T X)^{-1} X^T y.
fn oracle_ols(rows: &[(Vec<f64>, f64)], arity: usize) -> Vec<f64> {
    let k = arity + 1;
    let mut xtx = vec![vec![0.0f64; k]; k];
    let mut xty = vec![0.0f64; k];
    for (x, y) in rows {
        let mut full = Vec::with_capacity(k);
        full.push(1.0);
        full.extend_from_slice(x);
        for i in 0..k {
            for j in 0..k {
                xtx[i][j] += full[i] * full[j];
            }
            xty[i] += full[i] * y;
        }
    }
    // Gauss-Jordan inversion with partial pivoting.
    let n = k;
    let mut aug: Vec<Vec<f64>> = xtx
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| if i == j { 1.0 } else { 0.0 }));
            r
        })
        .collect();
    for col in 0..n {
        let pivot_row = (col..n)
            .max_by(|&a, &b| aug[a][col].abs().partial_cmp(&aug[b][col].abs()).unwrap())
            .unwrap();
        aug.swap(col, pivot_row);
        let pivot = aug[col][col];
        assert!(pivot.abs() > 1e-12, "oracle hit a singular design");
        for c in 0..2 * n {
            aug[col][c] /= pivot;
        }
        for r in 0..n {
            if r != col {
                let f = aug[r][col];
                if f != 0.0 {
                    for c in 0..2 * n {
                        aug[r][c] -= f * aug[col][c];
                    }
                }
            }
        }
    }
    (0..n).map(|i| (0..n).map(|j| aug[i][n + j] * xty[j]).sum()).collect()
}

fn record_from(x: &[f64], y: f64) -> TelemetryRecord {
    TelemetryRecord {
        device_id: 0,
        cpu_utilization: x[0],
        mobility_m: x[1],
        net_comm_s: x[2],
        response_time_s: x[3],
        power_available: x[4],
        energy_usage_j: x[5],
        exec_time_s: y,
        energy_consumed_j: 0.0,
    }
}

/// Criterion 3: the OLS fit agrees with the independent normal-equations
/// oracle to 1e-6 relative on 100 random full-rank instances, and recovers
/// noise-free linear coefficients to 1e-9.
#[test]
fn acceptance_3_regression_against_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst_rel: f64 = 0.0;
    for _ in 0..100 {
        let n = rng.gen_range(10..=200);
        let rows: Vec<(Vec<f64>, f64)> = (0..n)
            .map(|_| {
                let x: Vec<f64> = (0..6).map(|_| rng.gen_range(-4.0..4.0)).collect();
                (x, rng.gen_range(-20.0..20.0))
            })
            .collect();
        let mut window = TrainingWindow::new(n);
        for (x, y) in &rows {
            window.push(record_from(x, *y));
        }
        let model = fit(&window, Schema::ExecTimeFull).expect("random instance is full rank");
        let oracle = oracle_ols(&rows, 6);
        let rel = |a: f64, b: f64| (a - b).abs() / b.abs().max(1.0);
        worst_rel = worst_rel.max(rel(model.intercept, oracle[0]));
        for i in 0..6 {
            worst_rel = worst_rel.max(rel(model.coefficients[i], oracle[i + 1]));
        }
    }
    println!("criterion 3: worst relative deviation from oracle = {worst_rel:.3e}");
    assert!(worst_rel < 1e-6);

    // Exact recovery of noise-free linear data.
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let betas: Vec<f64> = (0..6).map(|_| rng.gen_range(-3.0..3.0)).collect();
    let intercept = 1.25;
    let mut window = TrainingWindow::new(64);
    for _ in 0..40 {
        let x: Vec<f64> = (0..6).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let y = intercept + x.iter().zip(&betas).map(|(a, b)| a * b).sum::<f64>();
        window.push(record_from(&x, y));
    }
    let model = fit(&window, Schema::ExecTimeFull).unwrap();
    let mut worst_abs = (model.intercept - intercept).abs();
    for i in 0..6 {
        worst_abs = worst_abs.max((model.coefficients[i] - betas[i]).abs());
    }
    println!("criterion 3: worst absolute error on noise-free fixture = {worst_abs:.3e}");
    assert!(worst_abs < 1e-9);
    assert!(model.residual_rmse < 1e-9);
}

/// Criterion 4: the ten-task fixture log aggregates to the hand-computed
/// report exactly at the default prices and penalty terms.
#[test]
fn acceptance_4_metric_oracle_equivalence() {
    // Task k (k = 1..=10): released at k, starts at k + 0.25, runs 60 s.
    // Response from app submission (0) is k + 60.25 against an agreed 62 s,
    // so tasks 2..=10 violate with DT = k - 1.75.
    let tasks: Vec<CompletedTask> = (1..=10)
        .map(|k| {
            let k = k as f64;
            CompletedTask {
                app_submit_s: 0.0,
                task_submit_s: k,
                exec_start_s: k + 0.25,
                exec_end_s: k + 60.25,
                energy_j: 2.5,
                agreed_response_s: 62.0,
            }
        })
        .collect();
    let rates = CostRates::default();
    let report = aggregate(&tasks, 3, 1.0, 0.5, &rates);

    // Spreadsheet-style oracle: independent row-by-row accumulation.
    let mut delay_sum = 0.0;
    let mut proc_sum = 0.0;
    let mut cost = 0.0;
    let mut penalty = 0.0;
    let mut violations = 0usize;
    let mut energy = 0.0;
    for k in 1..=10 {
        let k = k as f64;
        delay_sum += (k + 0.25) - k;
        let proc = 60.0;
        proc_sum += proc;
        cost += 2.0 / 1e6 * 1.65 + (proc / 60.0) / 1e6 * 0.132;
        let dt = (k + 60.25) - 62.0;
        if dt > 0.0 {
            violations += 1;
            penalty += 1.0 + 0.5 * dt;
        }
        energy += 2.5;
    }
    assert_eq!(report.avg_delay_s, delay_sum / 10.0);
    assert_eq!(report.avg_processing_s, proc_sum / 10.0);
    assert_eq!(report.total_processing_cost, cost);
    assert_eq!(report.sla_violation_count, violations);
    assert_eq!(report.total_penalty, penalty);
    assert_eq!(report.total_energy_j, energy);
    assert_eq!(report.tasks_completed, 10);
    assert_eq!(report.tasks_failed, 3);
    assert_eq!(report.sla_violation_pct, 90.0);

    // The same numbers by hand: delays 0.25; penalty 9 + 0.5 * 38.25.
    assert!((report.avg_delay_s - 0.25).abs() < 1e-12);
    assert!((report.avg_processing_s - 60.0).abs() < 1e-12);
    assert!((report.total_penalty - 28.125).abs() < 1e-12);
    assert!((report.total_processing_cost - 10.0 * 3.432e-6).abs() < 1e-18);
    println!(
        "criterion 4: avg_delay={} avg_proc={} cost={} violations={} penalty={}",
        report.avg_delay_s, report.avg_processing_s, report.total_processing_cost,
        report.sla_violation_count, report.total_penalty
    );
}

/// Criterion 5: logged per-task energy equals an offline recomputation from
/// the trace and timestamps exactly, and every device's total energy equals
/// idle + task + partial energy to 1e-9 relative.
#[test]
fn acceptance_5_energy_conservation() {
    let cfg = ScenarioConfig::default();
    for policy in [Policy::DeadlineAware, Policy::EnergyAware] {
        let artifacts = run_one(&cfg, policy, 1).unwrap();
        let scenario = fogsim_cli::build_scenario(&cfg, policy, 1).unwrap();
        let mut checked = 0;
        for t in &artifacts.tasks {
            let dev = scenario.devices.iter().find(|d| d.id == t.device_id).unwrap();
            let model = PowerModel::new(dev.power_idle_w, dev.power_max_w);
            let loaded = scenario.traces[dev.trace_id].with_load(t.exec_variation);
            let recomputed = energy_over(&model, &loaded, t.start_s, t.end_s).unwrap();
            assert_eq!(recomputed, t.energy_j, "task energy must recompute exactly");
            checked += 1;
        }
        let mut worst_rel: f64 = 0.0;
        for s in &artifacts.device_summaries {
            let split = s.idle_energy_j + s.task_energy_j + s.partial_task_energy_j;
            worst_rel = worst_rel.max((split - s.total_energy_j).abs() / s.total_energy_j.max(1.0));
        }
        println!(
            "criterion 5: {} tasks recomputed exactly under {}, worst device ledger deviation {worst_rel:.3e}",
            checked,
            policy.name()
        );
        assert!(checked > 0);
        assert!(worst_rel <= 1e-9);
    }
}

/// Criterion 6: two executions of `fogsim sweep --preset app` with the same
/// config produce byte-identical CSVs.
#[test]
fn acceptance_6_sweep_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let config_path = dir.path().join("fogsim.conf");
    // An empty config is the full default preset.
    std::fs::write(&config_path, "").unwrap();
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    for out in [&out_a, &out_b] {
        let status = std::process::Command::new(env!("CARGO_BIN_EXE_fogsim"))
            .args(["sweep", "--preset", "app", "--config"])
            .arg(&config_path)
            .arg("--out")
            .arg(out)
            .status()
            .expect("fogsim sweep runs");
        assert!(status.success());
    }
    let a = std::fs::read(out_a.join("sweep_app.csv")).unwrap();
    let b = std::fs::read(out_b.join("sweep_app.csv")).unwrap();
    println!("criterion 6: two sweep invocations produced {} identical bytes", a.len());
    assert!(!a.is_empty());
    assert_eq!(a, b, "sweep CSVs must be byte-identical");
}

/// Criterion 7: replaying every logged decision through the allocator with
/// the logged model snapshots reproduces the chosen device ids, and an
/// unknown requirement yields the none-decision.
#[test]
fn acceptance_7_decision_replay() {
    let cfg = ScenarioConfig::default();
    let params = AllocParams { hybrid_weight: cfg.hybrid_weight, safety_margin: cfg.safety_margin };
    let mut replayed = 0usize;
    for policy in Policy::ALL {
        let artifacts = run_one(&cfg, policy, 2).unwrap();
        for d in &artifacts.decisions {
            let again = if policy == Policy::BaselinePowerMin {
                baseline_power_min(&d.candidates, d.app_id, d.time_s).unwrap()
            } else {
                allocate(
                    &d.candidates,
                    d.app_id,
                    policy.requirement(),
                    &artifacts.model_history[d.model_epoch],
                    &params,
                    d.time_s,
                )
                .unwrap()
            };
            assert_eq!(
                again.chosen_device_id, d.decision.chosen_device_id,
                "replay diverged under {policy:?}"
            );
            replayed += 1;
        }
    }
    println!("criterion 7: {replayed} decisions replayed to identical device ids");
    assert!(replayed > 0);

    let artifacts = run_one(&cfg, Policy::DeadlineAware, 2).unwrap();
    let d = &artifacts.decisions[0];
    let none = allocate(
        &d.candidates,
        d.app_id,
        Requirement::Unknown,
        &artifacts.model_history[d.model_epoch],
        &params,
        d.time_s,
    )
    .unwrap();
    assert_eq!(none.chosen_device_id, None);
    assert_eq!(none.policy, None);
}

/// Criterion 8: over 1000 random score sets, the hybrid selection at the
/// weight endpoints agrees with the pure selections on every instance.
#[test]
fn acceptance_8_hybrid_endpoints() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for _ in 0..1000 {
        let n = rng.gen_range(1..=20);
        let scores: Vec<DeviceScore> = (0..n)
            .map(|i| DeviceScore {
                device_id: i as u32,
                etp_s: rng.gen_range(1e-3..50.0),
                eec_j: rng.gen_range(1e-3..50.0),
                power_available: true,
            })
            .collect();
        assert_eq!(select_hybrid(&scores, 1.0).unwrap(), select_deadline(&scores).unwrap());
        assert_eq!(select_hybrid(&scores, 0.0).unwrap(), select_energy(&scores).unwrap());
    }
    println!("criterion 8: 1000 random score sets agree at both weight endpoints");
}

/// Criterion 9: on the device sweep, the energy-aware policy consumes no
/// more task energy than the deadline-aware policy at every sweep point
/// (mean over seeds).
#[test]
fn acceptance_9_energy_awareness_effect() {
    let dev = curves(device_sweep_csv(), 2);
    let da = &dev["deadline_aware"];
    let ea = &dev["energy_aware"];
    for (point, da_metrics) in da {
        let da_energy = da_metrics["energy"];
        let ea_energy = ea[point]["energy"];
        println!(
            "criterion 9: n_devices={point} energy deadline={da_energy:.1} energy_aware={ea_energy:.1}"
        );
        assert!(
            ea_energy <= da_energy,
            "energy-aware must not exceed deadline-aware total energy at {point} devices"
        );
    }
}
