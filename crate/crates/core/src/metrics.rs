//! The four run metrics: delay, processing time, processing cost and SLA
//! penalty, plus per-run aggregation.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("execution started {0} s before submission")]
    NegativeDelay(f64),
    #[error("processing ended {0} s before it started")]
    NegativeDuration(f64),
}

/// SLA penalty terms: a flat charge plus a per-second rate once the agreed
/// response time is exceeded.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlaTerms {
    pub alpha: f64,
    pub beta: f64,
    pub agreed_response_s: f64,
}

/// Pricing for the messaging/connectivity cost model, quoted per million.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostRates {
    pub price_per_million_msgs: f64,
    pub price_per_million_conn_min: f64,
    /// Messages exchanged per task (request + response).
    pub messages_per_task: f64,
}

impl Default for CostRates {
    fn default() -> Self {
        CostRates {
            price_per_million_msgs: 1.65,
            price_per_million_conn_min: 0.132,
            messages_per_task: 2.0,
        }
    }
}

/// Aggregated metrics for one seeded run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunReport {
    pub avg_delay_s: f64,
    pub avg_processing_s: f64,
    pub total_processing_cost: f64,
    pub sla_violation_count: usize,
    pub sla_violation_pct: f64,
    pub total_penalty: f64,
    pub total_energy_j: f64,
    pub tasks_completed: usize,
    pub tasks_failed: usize,
}

/// The per-task slice of a run that the aggregate works from. Delay is
/// measured from the task's own submission to the allocator; the SLA
/// response is measured from the application's submission.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompletedTask {
    pub app_submit_s: f64,
    pub task_submit_s: f64,
    pub exec_start_s: f64,
    pub exec_end_s: f64,
    pub energy_j: f64,
    pub agreed_response_s: f64,
}

/// Time between submission and the start of execution.
pub fn delay(exec_start_s: f64, user_submit_s: f64) -> Result<f64, MetricsError> {
    let d = exec_start_s - user_submit_s;
    if d < 0.0 {
        return Err(MetricsError::NegativeDelay(-d));
    }
    Ok(d)
}

/// Time between processing start and processing end.
pub fn processing_time(p_start_s: f64, p_end_s: f64) -> Result<f64, MetricsError> {
    let d = p_end_s - p_start_s;
    if d < 0.0 {
        return Err(MetricsError::NegativeDuration(-d));
    }
    Ok(d)
}

/// Messaging plus connectivity cost at per-million prices.
pub fn processing_cost(
    message_count: f64,
    connection_minutes: f64,
    price_per_million_msgs: f64,
    price_per_million_conn_min: f64,
) -> f64 {
    message_count / 1e6 * price_per_million_msgs
        + connection_minutes / 1e6 * price_per_million_conn_min
}

/// Whether the response violates the SLA, and the penalty if it does:
/// `alpha + beta * DT` with `DT = max(0, response - agreed)`.
pub fn sla_penalty(terms: &SlaTerms, response_s: f64) -> (bool, f64) {
    let dt = (response_s - terms.agreed_response_s).max(0.0);
    if dt > 0.0 {
        (true, terms.alpha + terms.beta * dt)
    } else {
        (false, 0.0)
    }
}

/// Folds per-task records into a run report: means for delay and processing
/// time, sums for cost, penalty and energy, violation percentage over
/// completed tasks. An empty input yields a zeroed report.
pub fn aggregate(
    tasks: &[CompletedTask],
    tasks_failed: usize,
    alpha: f64,
    beta: f64,
    rates: &CostRates,
) -> RunReport {
    let mut report = RunReport { tasks_failed, ..RunReport::default() };
    if tasks.is_empty() {
        return report;
    }
    let mut delay_sum = 0.0;
    let mut proc_sum = 0.0;
    for t in tasks {
        let d = delay(t.exec_start_s, t.task_submit_s).expect("consistent task record");
        let p = processing_time(t.exec_start_s, t.exec_end_s).expect("consistent task record");
        delay_sum += d;
        proc_sum += p;
        report.total_processing_cost += processing_cost(
            rates.messages_per_task,
            p / 60.0,
            rates.price_per_million_msgs,
            rates.price_per_million_conn_min,
        );
        let terms = SlaTerms { alpha, beta, agreed_response_s: t.agreed_response_s };
        let (violated, penalty) = sla_penalty(&terms, t.exec_end_s - t.app_submit_s);
        if violated {
            report.sla_violation_count += 1;
            report.total_penalty += penalty;
        }
        report.total_energy_j += t.energy_j;
    }
    let n = tasks.len();
    report.tasks_completed = n;
    report.avg_delay_s = delay_sum / n as f64;
    report.avg_processing_s = proc_sum / n as f64;
    report.sla_violation_pct = 100.0 * report.sla_violation_count as f64 / n as f64;
    report
}

/// Header for the per-run report CSV.
pub const REPORT_CSV_HEADER: &str = "policy,seed,n_devices,n_apps,avg_delay_s,avg_proc_s,total_cost,sla_viol_pct,total_penalty,total_energy_j,completed,failed";

/// One report CSV row. Floats use the shortest exact representation so the
/// file round-trips bit-for-bit.
pub fn report_csv_row(policy: &str, seed: u64, n_devices: usize, n_apps: usize, r: &RunReport) -> String {
    format!(
        "{},{},{},{},{},{},{},{},{},{},{},{}",
        policy,
        seed,
        n_devices,
        n_apps,
        r.avg_delay_s,
        r.avg_processing_s,
        r.total_processing_cost,
        r.sla_violation_pct,
        r.total_penalty,
        r.total_energy_j,
        r.tasks_completed,
        r.tasks_failed
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn delay_is_a_difference() {
        assert_eq!(delay(12.0, 10.0).unwrap(), 2.0);
        assert_eq!(delay(10.0, 10.0).unwrap(), 0.0);
        assert_eq!(delay(10.0, 12.0), Err(MetricsError::NegativeDelay(2.0)));
    }

    #[test]
    fn processing_time_is_a_difference() {
        assert_eq!(processing_time(5.0, 9.0).unwrap(), 4.0);
        assert_eq!(processing_time(5.0, 5.0).unwrap(), 0.0);
        assert!(processing_time(5.0, 4.0).is_err());
    }

    #[test]
    fn cost_at_quoted_price_bounds() {
        let c = processing_cost(2_000_000.0, 1_000_000.0, 1.65, 0.132);
        assert!((c - 3.432).abs() < 1e-12);
        assert_eq!(processing_cost(0.0, 0.0, 1.65, 0.132), 0.0);
        assert!((processing_cost(1_000_000.0, 0.0, 1.0, 0.132) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn penalty_is_linear_past_the_agreement() {
        let terms = SlaTerms { alpha: 1.0, beta: 0.5, agreed_response_s: 10.0 };
        assert_eq!(sla_penalty(&terms, 14.0), (true, 3.0));
        assert_eq!(sla_penalty(&terms, 10.0), (false, 0.0));
        assert_eq!(sla_penalty(&terms, 5.0), (false, 0.0));
    }

    fn task(submit: f64, start: f64, end: f64, energy: f64, agreed: f64) -> CompletedTask {
        CompletedTask {
            app_submit_s: submit,
            task_submit_s: submit,
            exec_start_s: start,
            exec_end_s: end,
            energy_j: energy,
            agreed_response_s: agreed,
        }
    }

    #[test]
    fn aggregate_means_and_empty_input() {
        let rates = CostRates::default();
        let tasks = vec![task(0.0, 2.0, 3.0, 1.0, 100.0), task(0.0, 4.0, 5.0, 1.0, 100.0)];
        let r = aggregate(&tasks, 0, 1.0, 0.5, &rates);
        assert_eq!(r.avg_delay_s, 3.0);
        assert_eq!(r.tasks_completed, 2);
        assert_eq!(r.sla_violation_count, 0);

        let empty = aggregate(&[], 3, 1.0, 0.5, &rates);
        assert_eq!(empty, RunReport { tasks_failed: 3, ..RunReport::default() });
    }

    #[test]
    fn aggregate_matches_hand_computed_fixture() {
        // Three tasks with easy numbers: delays 1, 2, 3; processing 60 s each;
        // responses 61, 62, 63 against agreed 60, 62, 61.
        let rates = CostRates { price_per_million_msgs: 1.65, price_per_million_conn_min: 0.132, messages_per_task: 2.0 };
        let tasks = vec![
            task(0.0, 1.0, 61.0, 5.0, 60.0),
            task(0.0, 2.0, 62.0, 6.0, 62.0),
            task(0.0, 3.0, 63.0, 7.0, 61.0),
        ];
        let r = aggregate(&tasks, 1, 1.0, 0.5, &rates);
        assert_eq!(r.avg_delay_s, 2.0);
        assert_eq!(r.avg_processing_s, 60.0);
        // per task: 2 msgs -> 2/1e6*1.65, 1 conn-min -> 1/1e6*0.132
        let per_task_cost = 2.0 / 1e6 * 1.65 + 1.0 / 1e6 * 0.132;
        assert!((r.total_processing_cost - 3.0 * per_task_cost).abs() < 1e-15);
        // violations: task 1 (DT=1) and task 3 (DT=2); penalties 1.5 and 2.0
        assert_eq!(r.sla_violation_count, 2);
        assert!((r.total_penalty - 3.5).abs() < 1e-12);
        assert!((r.sla_violation_pct - 200.0 / 3.0).abs() < 1e-12);
        assert_eq!(r.total_energy_j, 18.0);
        assert_eq!(r.tasks_failed, 1);
    }

    proptest! {
        /// Penalty is monotone in the response and zero at or below the agreement.
        #[test]
        fn penalty_monotone(a in 0.0f64..50.0, b in 0.0f64..50.0, agreed in 1.0f64..20.0) {
            let terms = SlaTerms { alpha: 1.0, beta: 0.5, agreed_response_s: agreed };
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(sla_penalty(&terms, lo).1 <= sla_penalty(&terms, hi).1);
            prop_assert_eq!(sla_penalty(&terms, agreed), (false, 0.0));
        }

        /// Cost is linear in counts and prices.
        #[test]
        fn cost_is_linear(m in 0.0f64..1e7, c in 0.0f64..1e7, pm in 1.0f64..1.65, pc in 0.08f64..0.132, k in 0.0f64..10.0) {
            let base = processing_cost(m, c, pm, pc);
            let scaled = processing_cost(k * m, k * c, pm, pc);
            prop_assert!((scaled - k * base).abs() <= 1e-9 * base.abs().max(1.0));
        }

        /// Aggregation ignores record order.
        #[test]
        fn aggregate_is_permutation_invariant(seed in 0u64..1000) {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let mut tasks: Vec<CompletedTask> = (0..10)
                .map(|i| task(i as f64, i as f64 + 1.0, i as f64 + 3.0 + i as f64, 0.5 * i as f64, 2.5))
                .collect();
            let rates = CostRates::default();
            let before = aggregate(&tasks, 0, 1.0, 0.5, &rates);
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            tasks.shuffle(&mut rng);
            let after = aggregate(&tasks, 0, 1.0, 0.5, &rates);
            prop_assert!((before.avg_delay_s - after.avg_delay_s).abs() < 1e-12);
            prop_assert!((before.total_penalty - after.total_penalty).abs() < 1e-12);
            prop_assert_eq!(before.sla_violation_count, after.sla_violation_count);
        }

        /// A single-record aggregate reports that record's own metrics.
        #[test]
        fn single_record_aggregate(submit in 0.0f64..10.0, wait in 0.0f64..5.0, proc_s in 0.1f64..5.0) {
            let t = task(submit, submit + wait, submit + wait + proc_s, 2.0, 100.0);
            let r = aggregate(&[t], 0, 1.0, 0.5, &CostRates::default());
            prop_assert!((r.avg_delay_s - wait).abs() < 1e-12);
            prop_assert!((r.avg_processing_s - proc_s).abs() < 1e-12);
            prop_assert_eq!(r.tasks_completed, 1);
        }
    }
}
