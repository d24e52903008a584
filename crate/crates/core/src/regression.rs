//! Multiple linear regression over telemetry windows, solved by ordinary
//! least squares on the normal equations.
//!
//! Two outcome models are maintained: predicted execution time (with a base
//! four-predictor variant and a full six-predictor variant adding power
//! availability and energy usage) and predicted energy consumption (whose
//! sixth predictor is the execution time itself).

use std::collections::VecDeque;

use thiserror::Error;

use crate::domain::{FogDevice, TelemetryRecord};

/// Predictions never go below these floors.
pub const EPSILON_TIME_S: f64 = 1e-3;
pub const EPSILON_ENERGY_J: f64 = 1e-3;

/// Pivot threshold for rank-deficiency detection, relative to the largest
/// diagonal entry of the normal matrix.
pub const PIVOT_RTOL: f64 = 1e-10;

pub const DEFAULT_WINDOW_CAPACITY: usize = 500;

#[derive(Debug, Error, PartialEq)]
pub enum RegressionError {
    #[error("need at least {needed} records, have {have}")]
    InsufficientData { needed: usize, have: usize },
    #[error("design matrix is rank deficient (a predictor column is constant or collinear)")]
    RankDeficient,
    #[error("feature vector does not match model schema")]
    SchemaMismatch,
}

/// Which predictor set and outcome a model is fitted over.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Schema {
    /// cpu, mobility, netcomm, resptime -> execution time
    ExecTimeBase,
    /// cpu, mobility, netcomm, resptime, power_avail, energy_usage -> execution time
    ExecTimeFull,
    /// cpu, mobility, netcomm, resptime, power_avail, exec_time -> energy
    EnergyFull,
}

impl Schema {
    pub fn arity(&self) -> usize {
        match self {
            Schema::ExecTimeBase => 4,
            Schema::ExecTimeFull => 6,
            Schema::EnergyFull => 6,
        }
    }

    pub fn predicts_exec_time(&self) -> bool {
        matches!(self, Schema::ExecTimeBase | Schema::ExecTimeFull)
    }

    pub fn name(&self) -> &'static str {
        match self {
            Schema::ExecTimeBase => "exec_time_base",
            Schema::ExecTimeFull => "exec_time_full",
            Schema::EnergyFull => "energy_full",
        }
    }

    /// Projects a telemetry record onto (predictors, outcome) for this schema.
    pub fn project(&self, r: &TelemetryRecord) -> (Vec<f64>, f64) {
        match self {
            Schema::ExecTimeBase => (
                vec![r.cpu_utilization, r.mobility_m, r.net_comm_s, r.response_time_s],
                r.exec_time_s,
            ),
            Schema::ExecTimeFull => (
                vec![
                    r.cpu_utilization,
                    r.mobility_m,
                    r.net_comm_s,
                    r.response_time_s,
                    r.power_available,
                    r.energy_usage_j,
                ],
                r.exec_time_s,
            ),
            Schema::EnergyFull => (
                vec![
                    r.cpu_utilization,
                    r.mobility_m,
                    r.net_comm_s,
                    r.response_time_s,
                    r.power_available,
                    r.exec_time_s,
                ],
                r.energy_consumed_j,
            ),
        }
    }
}

/// Fitted coefficient vector plus residual summary.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionModel {
    pub schema: Schema,
    pub intercept: f64,
    pub coefficients: Vec<f64>,
    pub residual_rmse: f64,
    pub n_observations: usize,
}

impl RegressionModel {
    fn evaluate(&self, features: &[f64]) -> Result<f64, RegressionError> {
        if features.len() != self.schema.arity() || features.iter().any(|x| !x.is_finite()) {
            return Err(RegressionError::SchemaMismatch);
        }
        let mut y = self.intercept;
        for (beta, x) in self.coefficients.iter().zip(features) {
            y += beta * x;
        }
        Ok(y)
    }
}

/// FIFO window of the most recent telemetry records.
#[derive(Debug, Clone)]
pub struct TrainingWindow {
    capacity: usize,
    records: VecDeque<TelemetryRecord>,
}

impl TrainingWindow {
    pub fn new(capacity: usize) -> Self {
        TrainingWindow { capacity: capacity.max(1), records: VecDeque::new() }
    }

    pub fn push(&mut self, record: TelemetryRecord) {
        if self.records.len() == self.capacity {
            self.records.pop_front();
        }
        self.records.push_back(record);
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> impl Iterator<Item = &TelemetryRecord> {
        self.records.iter()
    }
}

impl Default for TrainingWindow {
    fn default() -> Self {
        TrainingWindow::new(DEFAULT_WINDOW_CAPACITY)
    }
}

/// Fits the schema over the window by OLS. Errors if the window is too
/// small or any predictor column is constant or collinear.
pub fn fit(window: &TrainingWindow, schema: Schema) -> Result<RegressionModel, RegressionError> {
    let cols: Vec<usize> = (0..=schema.arity()).collect();
    fit_columns(window, schema, &cols).map_err(RegressionError::from)
}

/// Rank-tolerant fit: predictor columns whose pivot collapses are dropped
/// (their coefficient becomes 0) and the remainder is refitted. Used by the
/// simulator so that a structurally constant predictor, such as power
/// availability when every chosen device passed the power filter, does not
/// block learning on the rest of the features.
pub fn fit_pruned(window: &TrainingWindow, schema: Schema) -> Result<RegressionModel, RegressionError> {
    let mut cols: Vec<usize> = (0..=schema.arity()).collect();
    loop {
        match fit_columns(window, schema, &cols) {
            Ok(model) => return Ok(model),
            Err(FitFailure::Insufficient { needed, have }) => {
                return Err(RegressionError::InsufficientData { needed, have })
            }
            Err(FitFailure::DeficientPivot(col)) => {
                if col == 0 {
                    // Intercept pivot is the record count; only fails on an
                    // empty window, which InsufficientData already covers.
                    return Err(RegressionError::RankDeficient);
                }
                cols.retain(|c| *c != col);
            }
        }
    }
}

enum FitFailure {
    Insufficient { needed: usize, have: usize },
    DeficientPivot(usize),
}

impl From<FitFailure> for RegressionError {
    fn from(f: FitFailure) -> Self {
        match f {
            FitFailure::Insufficient { needed, have } => RegressionError::InsufficientData { needed, have },
            FitFailure::DeficientPivot(_) => RegressionError::RankDeficient,
        }
    }
}

fn fit_columns(
    window: &TrainingWindow,
    schema: Schema,
    cols: &[usize],
) -> Result<RegressionModel, FitFailure> {
    let arity = schema.arity();
    let needed = arity + 1;
    let n = window.len();
    if n < needed {
        return Err(FitFailure::Insufficient { needed, have: n });
    }

    let rows: Vec<(Vec<f64>, f64)> = window.records().map(|r| schema.project(r)).collect();
    let k = cols.len();

    // Normal equations over the selected columns; column 0 is the intercept.
    let mut a = vec![vec![0.0f64; k]; k];
    let mut b = vec![0.0f64; k];
    for (x, y) in &rows {
        for (i, &ci) in cols.iter().enumerate() {
            let xi = if ci == 0 { 1.0 } else { x[ci - 1] };
            for (j, &cj) in cols.iter().enumerate() {
                let xj = if cj == 0 { 1.0 } else { x[cj - 1] };
                a[i][j] += xi * xj;
            }
            b[i] += xi * y;
        }
    }

    let max_diag = a.iter().enumerate().map(|(i, row)| row[i].abs()).fold(0.0f64, f64::max);
    let threshold = PIVOT_RTOL * max_diag;

    // Gaussian elimination on the symmetric positive semi-definite system,
    // pivoting on the diagonal so a failing pivot names its column.
    let mut beta = b;
    for i in 0..k {
        let pivot = a[i][i];
        if pivot.abs() <= threshold || pivot.is_nan() {
            return Err(FitFailure::DeficientPivot(cols[i]));
        }
        for r in (i + 1)..k {
            let factor = a[r][i] / pivot;
            if factor != 0.0 {
                let (upper, lower) = a.split_at_mut(r);
                let (pivot_row, row) = (&upper[i], &mut lower[0]);
                for c in i..k {
                    row[c] -= factor * pivot_row[c];
                }
                beta[r] -= factor * beta[i];
            }
        }
    }
    for i in (0..k).rev() {
        let mut acc = beta[i];
        for c in (i + 1)..k {
            acc -= a[i][c] * beta[c];
        }
        beta[i] = acc / a[i][i];
    }

    // Embed the solved coefficients back into the full schema layout.
    let mut intercept = 0.0;
    let mut coefficients = vec![0.0; arity];
    for (i, &ci) in cols.iter().enumerate() {
        if ci == 0 {
            intercept = beta[i];
        } else {
            coefficients[ci - 1] = beta[i];
        }
    }

    let mut sse = 0.0;
    for (x, y) in &rows {
        let mut pred = intercept;
        for (beta_i, xi) in coefficients.iter().zip(x) {
            pred += beta_i * xi;
        }
        let r = y - pred;
        sse += r * r;
    }
    let dof = n as isize - k as isize;
    let residual_rmse = if dof > 0 { (sse.max(0.0) / dof as f64).sqrt() } else { 0.0 };

    Ok(RegressionModel {
        schema,
        intercept,
        coefficients,
        residual_rmse,
        n_observations: n,
    })
}

/// Predicted execution time in seconds, clamped below at [`EPSILON_TIME_S`].
pub fn predict_exec_time(model: &RegressionModel, features: &[f64]) -> Result<f64, RegressionError> {
    if !model.schema.predicts_exec_time() {
        return Err(RegressionError::SchemaMismatch);
    }
    Ok(model.evaluate(features)?.max(EPSILON_TIME_S))
}

/// Predicted energy in joules, clamped below at [`EPSILON_ENERGY_J`].
pub fn predict_energy(model: &RegressionModel, features: &[f64]) -> Result<f64, RegressionError> {
    if model.schema != Schema::EnergyFull {
        return Err(RegressionError::SchemaMismatch);
    }
    Ok(model.evaluate(features)?.max(EPSILON_ENERGY_J))
}

/// Deterministic bootstrap model used before enough telemetry exists.
///
/// Execution-time schemas get a CPU-utilization coefficient of
/// task length / mean fleet MIPS; the energy schema gets an execution-time
/// coefficient equal to the mean idle power. The residual starts at zero.
pub fn cold_start_model(schema: Schema, devices: &[FogDevice], task_length_mi: f64) -> RegressionModel {
    let n = devices.len().max(1) as f64;
    let mean_mips: f64 = devices.iter().map(|d| d.mips_capacity).sum::<f64>() / n;
    let mean_idle_w: f64 = devices.iter().map(|d| d.power_idle_w).sum::<f64>() / n;

    let mut coefficients = vec![0.0; schema.arity()];
    match schema {
        Schema::ExecTimeBase | Schema::ExecTimeFull => {
            coefficients[0] = if mean_mips > 0.0 { task_length_mi / mean_mips } else { 0.0 };
        }
        Schema::EnergyFull => {
            coefficients[5] = mean_idle_w;
        }
    }
    RegressionModel {
        schema,
        intercept: 0.0,
        coefficients,
        residual_rmse: 0.0,
        n_observations: 0,
    }
}

/// CSV dump of fitted models: `schema,beta0,...,beta6,rmse,n` with unused
/// coefficient columns left empty.
pub fn models_to_csv(models: &[RegressionModel]) -> String {
    let mut out = String::from("schema,beta0,beta1,beta2,beta3,beta4,beta5,beta6,rmse,n\n");
    for m in models {
        let mut cells = vec![m.schema.name().to_string(), format!("{}", m.intercept)];
        for i in 0..6 {
            cells.push(m.coefficients.get(i).map(|c| format!("{c}")).unwrap_or_default());
        }
        cells.push(format!("{}", m.residual_rmse));
        cells.push(format!("{}", m.n_observations));
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}
