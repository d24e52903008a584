//! Folds a sweep report CSV into per-point policy means plus percentage
//! improvements over the power-minimizing baseline.

use std::collections::BTreeMap;

use fogsim_core::metrics::REPORT_CSV_HEADER;
use fogsim_core::Policy;

use crate::CliError;

#[derive(Debug, Clone)]
struct Row {
    policy: String,
    n_devices: usize,
    n_apps: usize,
    avg_delay_s: f64,
    avg_proc_s: f64,
    total_cost: f64,
    sla_viol_pct: f64,
    total_penalty: f64,
    total_energy_j: f64,
}

const METRICS: usize = 6;

fn parse_rows(csv: &str) -> Result<Vec<Row>, CliError> {
    let mut lines = csv.lines();
    let header = lines.next().unwrap_or_default();
    if header != REPORT_CSV_HEADER {
        return Err(CliError::Summarize("input is not a run report CSV (header mismatch)".into()));
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != 12 {
            return Err(CliError::Summarize(format!("row {} has {} cells", i + 2, cells.len())));
        }
        let num = |idx: usize| -> Result<f64, CliError> {
            cells[idx]
                .parse()
                .map_err(|_| CliError::Summarize(format!("row {}: bad number `{}`", i + 2, cells[idx])))
        };
        rows.push(Row {
            policy: cells[0].to_string(),
            n_devices: num(2)? as usize,
            n_apps: num(3)? as usize,
            avg_delay_s: num(4)?,
            avg_proc_s: num(5)?,
            total_cost: num(6)?,
            sla_viol_pct: num(7)?,
            total_penalty: num(8)?,
            total_energy_j: num(9)?,
        });
    }
    Ok(rows)
}

/// Per sweep point and policy: metric means over seeds, and when baseline
/// rows are present, the percentage improvement of every other policy over
/// the baseline on each metric (positive = better than baseline).
pub fn summarize(csv: &str) -> Result<String, CliError> {
    let rows = parse_rows(csv)?;
    let mut groups: BTreeMap<(usize, usize), BTreeMap<String, Vec<&Row>>> = BTreeMap::new();
    for row in &rows {
        groups
            .entry((row.n_devices, row.n_apps))
            .or_default()
            .entry(row.policy.clone())
            .or_default()
            .push(row);
    }

    let baseline_name = Policy::BaselinePowerMin.name();
    let with_improvements = rows.iter().any(|r| r.policy == baseline_name)
        && rows.iter().any(|r| r.policy != baseline_name);

    let mut out = String::from("n_devices,n_apps,policy,avg_delay_s,avg_proc_s,total_cost,sla_viol_pct,total_penalty,total_energy_j");
    if with_improvements {
        out.push_str(",delay_vs_baseline_pct,proc_vs_baseline_pct,cost_vs_baseline_pct,sla_vs_baseline_pct,penalty_vs_baseline_pct,energy_vs_baseline_pct");
    }
    out.push('\n');

    for ((n_devices, n_apps), by_policy) in &groups {
        let means = |rows: &[&Row]| -> [f64; METRICS] {
            let n = rows.len() as f64;
            [
                rows.iter().map(|r| r.avg_delay_s).sum::<f64>() / n,
                rows.iter().map(|r| r.avg_proc_s).sum::<f64>() / n,
                rows.iter().map(|r| r.total_cost).sum::<f64>() / n,
                rows.iter().map(|r| r.sla_viol_pct).sum::<f64>() / n,
                rows.iter().map(|r| r.total_penalty).sum::<f64>() / n,
                rows.iter().map(|r| r.total_energy_j).sum::<f64>() / n,
            ]
        };
        let baseline = by_policy.get(baseline_name).map(|rows| means(rows));

        // Report policies in the canonical order, then any others by name.
        let mut names: Vec<&String> = by_policy.keys().collect();
        names.sort_by_key(|name| {
            Policy::parse(name).map(|p| Policy::ALL.iter().position(|q| *q == p).unwrap()).unwrap_or(usize::MAX)
        });

        for name in names {
            let m = means(&by_policy[name]);
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{}",
                n_devices, n_apps, name, m[0], m[1], m[2], m[3], m[4], m[5]
            ));
            if with_improvements {
                if name == baseline_name {
                    out.push_str(",,,,,,");
                } else if let Some(base) = baseline {
                    for k in 0..METRICS {
                        if base[k] != 0.0 {
                            out.push_str(&format!(",{}", (base[k] - m[k]) / base[k] * 100.0));
                        } else {
                            out.push(',');
                        }
                    }
                } else {
                    out.push_str(",,,,,,");
                }
            }
            out.push('\n');
        }
    }
    Ok(out)
}
