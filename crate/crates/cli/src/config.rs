//! Flat `key = value` scenario configuration. Unset keys fall back to the
//! default simulation parameters; unknown keys are rejected.

use std::fmt::Write as _;
use std::path::Path;

use fogsim_core::domain::{SERVER_BANDWIDTH_BPS, SERVER_MIPS, SERVER_RAM_MB};
use fogsim_core::Policy;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("cannot read config: {0}")]
    Io(String),
    #[error("config line {line} is malformed")]
    ParseError { line: usize },
    #[error("unknown config key `{name}` on line {line}")]
    UnknownKey { name: String, line: usize },
    #[error("config key `{key}` is out of range")]
    OutOfRange { key: &'static str },
}

/// Every knob of a scenario, configurable through the flat file format.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub n_devices: usize,
    pub n_servers: usize,
    pub n_apps: usize,
    pub horizon_s: f64,
    pub seeds: Vec<u64>,
    pub policies: Vec<Policy>,

    pub server_mips: f64,
    pub server_bandwidth_bps: f64,
    pub server_ram_mb: u64,
    pub server_power_idle_w: f64,
    pub server_power_max_w: f64,

    pub device_mips_min: f64,
    pub device_mips_max: f64,
    pub device_bandwidth_bps: f64,
    pub device_ram_mb: u64,

    pub task_length_mi: f64,
    pub subtask_length_mi: f64,
    pub data_size_min_b: u64,
    pub data_size_max_b: u64,
    pub tasks_per_app: usize,

    pub min_deadline_slack_s: f64,
    pub deadline_slack_min: f64,
    pub deadline_slack_max: f64,
    pub availability_min: f64,
    pub availability_max: f64,
    pub exec_variation_min: f64,
    pub exec_variation_max: f64,
    pub distance_min_m: f64,
    pub distance_max_m: f64,
    pub battery_min_pct: f64,
    pub battery_max_pct: f64,

    pub power_idle_w: f64,
    pub power_max_w: f64,
    pub battery_capacity_j: f64,
    pub safety_margin: f64,

    pub hybrid_weight: f64,
    pub window_capacity: usize,
    pub retrain_interval: usize,
    pub event_cap: u64,

    pub sla_alpha: f64,
    pub sla_beta: f64,
    pub price_per_million_msgs: f64,
    pub price_per_million_conn_min: f64,

    /// Directory of PlanetLab trace files; empty means synthetic traces.
    pub trace_dir: String,
    pub trace_count: usize,
    pub trace_len: usize,
    pub trace_interval_s: f64,
    pub trace_mean_min: f64,
    pub trace_mean_max: f64,
    pub trace_jitter: f64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            n_devices: 50,
            n_servers: 0,
            n_apps: 280,
            horizon_s: 3600.0,
            seeds: vec![1, 2, 3, 4, 5],
            policies: Policy::ALL.to_vec(),

            server_mips: SERVER_MIPS,
            server_bandwidth_bps: SERVER_BANDWIDTH_BPS,
            server_ram_mb: SERVER_RAM_MB,
            server_power_idle_w: 5.0,
            server_power_max_w: 25.0,

            device_mips_min: 2_000.0,
            device_mips_max: 6_000.0,
            device_bandwidth_bps: 100_000.0,
            device_ram_mb: 2_048,

            task_length_mi: 3_000.0,
            subtask_length_mi: 500.0,
            data_size_min_b: 5_120,
            data_size_max_b: 8_192,
            tasks_per_app: 10,

            min_deadline_slack_s: 4.0,
            deadline_slack_min: 0.10,
            deadline_slack_max: 0.80,
            availability_min: 0.50,
            availability_max: 1.30,
            exec_variation_min: 0.10,
            exec_variation_max: 0.40,
            distance_min_m: 5.0,
            distance_max_m: 40.0,
            battery_min_pct: 0.20,
            battery_max_pct: 0.90,

            power_idle_w: 1.0,
            power_max_w: 5.0,
            battery_capacity_j: 15_000.0,
            safety_margin: 1.2,

            hybrid_weight: 0.5,
            window_capacity: 500,
            retrain_interval: 25,
            event_cap: 10_000_000,

            sla_alpha: 1.0,
            sla_beta: 0.5,
            price_per_million_msgs: 1.65,
            price_per_million_conn_min: 0.132,

            trace_dir: String::new(),
            trace_count: 20,
            trace_len: 512,
            trace_interval_s: 30.0,
            trace_mean_min: 0.05,
            trace_mean_max: 0.85,
            trace_jitter: 0.10,
        }
    }
}

fn parse_num<T: std::str::FromStr>(value: &str, line: usize) -> Result<T, ConfigError> {
    value.trim().parse().map_err(|_| ConfigError::ParseError { line })
}

fn parse_list<T: std::str::FromStr>(value: &str, line: usize) -> Result<Vec<T>, ConfigError> {
    value
        .split(',')
        .map(|v| v.trim().parse().map_err(|_| ConfigError::ParseError { line }))
        .collect()
}

/// Parses the flat format and validates ranges. Returns the config together
/// with non-fatal warnings (prices outside the quoted bounds).
pub fn parse_config(text: &str) -> Result<(ScenarioConfig, Vec<String>), ConfigError> {
    let mut cfg = ScenarioConfig::default();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let stripped = raw.split('#').next().unwrap_or("").trim();
        if stripped.is_empty() {
            continue;
        }
        let (key, value) = stripped.split_once('=').ok_or(ConfigError::ParseError { line })?;
        let key = key.trim();
        let value = value.trim();
        match key {
            "n_devices" => cfg.n_devices = parse_num(value, line)?,
            "n_servers" => cfg.n_servers = parse_num(value, line)?,
            "n_apps" => cfg.n_apps = parse_num(value, line)?,
            "horizon_s" => cfg.horizon_s = parse_num(value, line)?,
            "seeds" => cfg.seeds = parse_list(value, line)?,
            "policies" => {
                cfg.policies = value
                    .split(',')
                    .map(|p| Policy::parse(p.trim()).ok_or(ConfigError::ParseError { line }))
                    .collect::<Result<_, _>>()?
            }
            "server_mips" => cfg.server_mips = parse_num(value, line)?,
            "server_bandwidth_bps" => cfg.server_bandwidth_bps = parse_num(value, line)?,
            "server_ram_mb" => cfg.server_ram_mb = parse_num(value, line)?,
            "server_power_idle_w" => cfg.server_power_idle_w = parse_num(value, line)?,
            "server_power_max_w" => cfg.server_power_max_w = parse_num(value, line)?,
            "device_mips_min" => cfg.device_mips_min = parse_num(value, line)?,
            "device_mips_max" => cfg.device_mips_max = parse_num(value, line)?,
            "device_bandwidth_bps" => cfg.device_bandwidth_bps = parse_num(value, line)?,
            "device_ram_mb" => cfg.device_ram_mb = parse_num(value, line)?,
            "task_length_mi" => cfg.task_length_mi = parse_num(value, line)?,
            "subtask_length_mi" => cfg.subtask_length_mi = parse_num(value, line)?,
            "data_size_min_b" => cfg.data_size_min_b = parse_num(value, line)?,
            "data_size_max_b" => cfg.data_size_max_b = parse_num(value, line)?,
            "tasks_per_app" => cfg.tasks_per_app = parse_num(value, line)?,
            "min_deadline_slack_s" => cfg.min_deadline_slack_s = parse_num(value, line)?,
            "deadline_slack_min" => cfg.deadline_slack_min = parse_num(value, line)?,
            "deadline_slack_max" => cfg.deadline_slack_max = parse_num(value, line)?,
            "availability_min" => cfg.availability_min = parse_num(value, line)?,
            "availability_max" => cfg.availability_max = parse_num(value, line)?,
            "exec_variation_min" => cfg.exec_variation_min = parse_num(value, line)?,
            "exec_variation_max" => cfg.exec_variation_max = parse_num(value, line)?,
            "distance_min_m" => cfg.distance_min_m = parse_num(value, line)?,
            "distance_max_m" => cfg.distance_max_m = parse_num(value, line)?,
            "battery_min_pct" => cfg.battery_min_pct = parse_num(value, line)?,
            "battery_max_pct" => cfg.battery_max_pct = parse_num(value, line)?,
            "power_idle_w" => cfg.power_idle_w = parse_num(value, line)?,
            "power_max_w" => cfg.power_max_w = parse_num(value, line)?,
            "battery_capacity_j" => cfg.battery_capacity_j = parse_num(value, line)?,
            "safety_margin" => cfg.safety_margin = parse_num(value, line)?,
            "hybrid_weight" => cfg.hybrid_weight = parse_num(value, line)?,
            "window_capacity" => cfg.window_capacity = parse_num(value, line)?,
            "retrain_interval" => cfg.retrain_interval = parse_num(value, line)?,
            "event_cap" => cfg.event_cap = parse_num(value, line)?,
            "sla_alpha" => cfg.sla_alpha = parse_num(value, line)?,
            "sla_beta" => cfg.sla_beta = parse_num(value, line)?,
            "price_per_million_msgs" => cfg.price_per_million_msgs = parse_num(value, line)?,
            "price_per_million_conn_min" => cfg.price_per_million_conn_min = parse_num(value, line)?,
            "trace_dir" => cfg.trace_dir = value.to_string(),
            "trace_count" => cfg.trace_count = parse_num(value, line)?,
            "trace_len" => cfg.trace_len = parse_num(value, line)?,
            "trace_interval_s" => cfg.trace_interval_s = parse_num(value, line)?,
            "trace_mean_min" => cfg.trace_mean_min = parse_num(value, line)?,
            "trace_mean_max" => cfg.trace_mean_max = parse_num(value, line)?,
            "trace_jitter" => cfg.trace_jitter = parse_num(value, line)?,
            other => return Err(ConfigError::UnknownKey { name: other.to_string(), line }),
        }
    }
    let warnings = validate(&cfg)?;
    Ok((cfg, warnings))
}

fn validate(cfg: &ScenarioConfig) -> Result<Vec<String>, ConfigError> {
    fn ordered(key: &'static str, lo: f64, hi: f64) -> Result<(), ConfigError> {
        if lo.is_finite() && hi.is_finite() && lo <= hi {
            Ok(())
        } else {
            Err(ConfigError::OutOfRange { key })
        }
    }
    fn positive(key: &'static str, v: f64) -> Result<(), ConfigError> {
        if v.is_finite() && v > 0.0 {
            Ok(())
        } else {
            Err(ConfigError::OutOfRange { key })
        }
    }

    if cfg.n_devices + cfg.n_servers == 0 {
        return Err(ConfigError::OutOfRange { key: "n_devices" });
    }
    if cfg.seeds.is_empty() {
        return Err(ConfigError::OutOfRange { key: "seeds" });
    }
    if cfg.policies.is_empty() {
        return Err(ConfigError::OutOfRange { key: "policies" });
    }
    if cfg.tasks_per_app == 0 {
        return Err(ConfigError::OutOfRange { key: "tasks_per_app" });
    }
    positive("horizon_s", cfg.horizon_s)?;
    positive("task_length_mi", cfg.task_length_mi)?;
    positive("subtask_length_mi", cfg.subtask_length_mi)?;
    positive("server_mips", cfg.server_mips)?;
    positive("server_bandwidth_bps", cfg.server_bandwidth_bps)?;
    positive("device_bandwidth_bps", cfg.device_bandwidth_bps)?;
    positive("battery_capacity_j", cfg.battery_capacity_j)?;
    positive("trace_interval_s", cfg.trace_interval_s)?;
    ordered("device_mips_min", cfg.device_mips_min, cfg.device_mips_max)?;
    positive("device_mips_min", cfg.device_mips_min)?;
    if cfg.data_size_min_b > cfg.data_size_max_b {
        return Err(ConfigError::OutOfRange { key: "data_size_min_b" });
    }
    ordered("deadline_slack_min", cfg.deadline_slack_min, cfg.deadline_slack_max)?;
    if cfg.deadline_slack_min < 0.0 {
        return Err(ConfigError::OutOfRange { key: "deadline_slack_min" });
    }
    ordered("availability_min", cfg.availability_min, cfg.availability_max)?;
    positive("availability_min", cfg.availability_min)?;
    ordered("exec_variation_min", cfg.exec_variation_min, cfg.exec_variation_max)?;
    if cfg.exec_variation_min < 0.0 || cfg.exec_variation_max > 1.0 {
        return Err(ConfigError::OutOfRange { key: "exec_variation_min" });
    }
    ordered("distance_min_m", cfg.distance_min_m, cfg.distance_max_m)?;
    ordered("battery_min_pct", cfg.battery_min_pct, cfg.battery_max_pct)?;
    if cfg.battery_min_pct < 0.0 || cfg.battery_max_pct > 1.0 {
        return Err(ConfigError::OutOfRange { key: "battery_min_pct" });
    }
    if !(cfg.power_idle_w >= 0.0 && cfg.power_idle_w < cfg.power_max_w) {
        return Err(ConfigError::OutOfRange { key: "power_idle_w" });
    }
    if !(cfg.server_power_idle_w >= 0.0 && cfg.server_power_idle_w < cfg.server_power_max_w) {
        return Err(ConfigError::OutOfRange { key: "server_power_idle_w" });
    }
    if !(0.0..=1.0).contains(&cfg.hybrid_weight) {
        return Err(ConfigError::OutOfRange { key: "hybrid_weight" });
    }
    if cfg.safety_margin < 0.0 || !cfg.safety_margin.is_finite() {
        return Err(ConfigError::OutOfRange { key: "safety_margin" });
    }
    if cfg.window_capacity == 0 {
        return Err(ConfigError::OutOfRange { key: "window_capacity" });
    }
    if cfg.retrain_interval == 0 {
        return Err(ConfigError::OutOfRange { key: "retrain_interval" });
    }
    if cfg.sla_alpha < 0.0 || cfg.sla_beta < 0.0 {
        return Err(ConfigError::OutOfRange { key: "sla_alpha" });
    }
    if cfg.price_per_million_msgs < 0.0 || cfg.price_per_million_conn_min < 0.0 {
        return Err(ConfigError::OutOfRange { key: "price_per_million_msgs" });
    }
    if cfg.trace_dir.is_empty() {
        if cfg.trace_count == 0 || cfg.trace_len == 0 {
            return Err(ConfigError::OutOfRange { key: "trace_count" });
        }
        ordered("trace_mean_min", cfg.trace_mean_min, cfg.trace_mean_max)?;
        if cfg.trace_mean_min < 0.0 || cfg.trace_mean_max > 1.0 || cfg.trace_jitter < 0.0 {
            return Err(ConfigError::OutOfRange { key: "trace_mean_min" });
        }
    }

    let mut warnings = Vec::new();
    if !(1.0..=1.65).contains(&cfg.price_per_million_msgs) {
        warnings.push(format!(
            "price_per_million_msgs = {} is outside the quoted 1.00..1.65 range",
            cfg.price_per_million_msgs
        ));
    }
    if !(0.08..=0.132).contains(&cfg.price_per_million_conn_min) {
        warnings.push(format!(
            "price_per_million_conn_min = {} is outside the quoted 0.08..0.132 range",
            cfg.price_per_million_conn_min
        ));
    }
    Ok(warnings)
}

/// Reads a config file; warnings go to stderr.
pub fn load_config<P: AsRef<Path>>(path: P) -> Result<ScenarioConfig, ConfigError> {
    let text = std::fs::read_to_string(&path).map_err(|e| ConfigError::Io(e.to_string()))?;
    let (cfg, warnings) = parse_config(&text)?;
    for w in warnings {
        eprintln!("warning: {w}");
    }
    Ok(cfg)
}

/// Serializes a config in the same flat format `parse_config` accepts.
pub fn dump_config(cfg: &ScenarioConfig) -> String {
    let mut s = String::new();
    let seeds = cfg.seeds.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",");
    let policies = cfg.policies.iter().map(|p| p.name()).collect::<Vec<_>>().join(",");
    let _ = writeln!(s, "n_devices = {}", cfg.n_devices);
    let _ = writeln!(s, "n_servers = {}", cfg.n_servers);
    let _ = writeln!(s, "n_apps = {}", cfg.n_apps);
    let _ = writeln!(s, "horizon_s = {}", cfg.horizon_s);
    let _ = writeln!(s, "seeds = {seeds}");
    let _ = writeln!(s, "policies = {policies}");
    let _ = writeln!(s, "server_mips = {}", cfg.server_mips);
    let _ = writeln!(s, "server_bandwidth_bps = {}", cfg.server_bandwidth_bps);
    let _ = writeln!(s, "server_ram_mb = {}", cfg.server_ram_mb);
    let _ = writeln!(s, "server_power_idle_w = {}", cfg.server_power_idle_w);
    let _ = writeln!(s, "server_power_max_w = {}", cfg.server_power_max_w);
    let _ = writeln!(s, "device_mips_min = {}", cfg.device_mips_min);
    let _ = writeln!(s, "device_mips_max = {}", cfg.device_mips_max);
    let _ = writeln!(s, "device_bandwidth_bps = {}", cfg.device_bandwidth_bps);
    let _ = writeln!(s, "device_ram_mb = {}", cfg.device_ram_mb);
    let _ = writeln!(s, "task_length_mi = {}", cfg.task_length_mi);
    let _ = writeln!(s, "subtask_length_mi = {}", cfg.subtask_length_mi);
    let _ = writeln!(s, "data_size_min_b = {}", cfg.data_size_min_b);
    let _ = writeln!(s, "data_size_max_b = {}", cfg.data_size_max_b);
    let _ = writeln!(s, "tasks_per_app = {}", cfg.tasks_per_app);
    let _ = writeln!(s, "min_deadline_slack_s = {}", cfg.min_deadline_slack_s);
    let _ = writeln!(s, "deadline_slack_min = {}", cfg.deadline_slack_min);
    let _ = writeln!(s, "deadline_slack_max = {}", cfg.deadline_slack_max);
    let _ = writeln!(s, "availability_min = {}", cfg.availability_min);
    let _ = writeln!(s, "availability_max = {}", cfg.availability_max);
    let _ = writeln!(s, "exec_variation_min = {}", cfg.exec_variation_min);
    let _ = writeln!(s, "exec_variation_max = {}", cfg.exec_variation_max);
    let _ = writeln!(s, "distance_min_m = {}", cfg.distance_min_m);
    let _ = writeln!(s, "distance_max_m = {}", cfg.distance_max_m);
    let _ = writeln!(s, "battery_min_pct = {}", cfg.battery_min_pct);
    let _ = writeln!(s, "battery_max_pct = {}", cfg.battery_max_pct);
    let _ = writeln!(s, "power_idle_w = {}", cfg.power_idle_w);
    let _ = writeln!(s, "power_max_w = {}", cfg.power_max_w);
    let _ = writeln!(s, "battery_capacity_j = {}", cfg.battery_capacity_j);
    let _ = writeln!(s, "safety_margin = {}", cfg.safety_margin);
    let _ = writeln!(s, "hybrid_weight = {}", cfg.hybrid_weight);
    let _ = writeln!(s, "window_capacity = {}", cfg.window_capacity);
    let _ = writeln!(s, "retrain_interval = {}", cfg.retrain_interval);
    let _ = writeln!(s, "event_cap = {}", cfg.event_cap);
    let _ = writeln!(s, "sla_alpha = {}", cfg.sla_alpha);
    let _ = writeln!(s, "sla_beta = {}", cfg.sla_beta);
    let _ = writeln!(s, "price_per_million_msgs = {}", cfg.price_per_million_msgs);
    let _ = writeln!(s, "price_per_million_conn_min = {}", cfg.price_per_million_conn_min);
    let _ = writeln!(s, "trace_dir = {}", cfg.trace_dir);
    let _ = writeln!(s, "trace_count = {}", cfg.trace_count);
    let _ = writeln!(s, "trace_len = {}", cfg.trace_len);
    let _ = writeln!(s, "trace_interval_s = {}", cfg.trace_interval_s);
    let _ = writeln!(s, "trace_mean_min = {}", cfg.trace_mean_min);
    let _ = writeln!(s, "trace_mean_max = {}", cfg.trace_mean_max);
    let _ = writeln!(s, "trace_jitter = {}", cfg.trace_jitter);
    s
}
