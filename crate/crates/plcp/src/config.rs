//! Experiment configuration in TOML with human units.
//!
//! Densities are per km² (areal) or per km (along roads), powers in dBm,
//! gains and thresholds in dB and angles in degrees. Parsing collects every
//! problem with its line number before failing, and unknown keys are errors.

use plcp_core::coverage::MmWaveForm;
use plcp_core::model::{
    db_to_linear, dbm_to_watts, micro_wave_intercept_db, mm_wave_intercept_db, thermal_noise_watts, ModelError,
    PerClass, SystemParams, MICRO_WAVE_CARRIER_GHZ, MM_WAVE_CARRIER_GHZ,
};
use serde::Serialize;
use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use toml::de::{DeTable, DeValue};
use toml::{Table, Value};

use crate::experiment::Experiment;

/// System parameters in the units used at the file boundary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HumanParams {
    pub lambda_m_per_km2: f64,
    pub lambda_r_per_km2: f64,
    pub lambda_s_per_km: f64,
    pub lambda_ou_per_km: f64,
    pub d_m: f64,
    pub p_tx_macro_dbm: f64,
    pub p_tx_small_dbm: f64,
    pub k_ml_db: f64,
    pub k_mn_db: f64,
    pub k_sl_mu_db: f64,
    pub k_sl_mm_db: f64,
    pub k_sn_db: f64,
    pub alpha_ml: f64,
    pub alpha_mn: f64,
    pub alpha_sl_mu: f64,
    pub alpha_sl_mm: f64,
    pub alpha_sn: f64,
    pub g0_db: f64,
    pub theta_deg: f64,
    pub h_m: f64,
    pub noise_figure_db: f64,
    pub bandwidth_mu_mhz: f64,
    pub bandwidth_mm_mhz: f64,
    pub nakagami_m: f64,
}

impl Default for HumanParams {
    fn default() -> Self {
        let k_mu = -micro_wave_intercept_db(MICRO_WAVE_CARRIER_GHZ);
        let k_mm = -mm_wave_intercept_db(MM_WAVE_CARRIER_GHZ);
        HumanParams {
            lambda_m_per_km2: 1.0,
            lambda_r_per_km2: 10.0,
            lambda_s_per_km: 100.0,
            lambda_ou_per_km: 10.0,
            d_m: 200.0,
            p_tx_macro_dbm: 45.0,
            p_tx_small_dbm: 30.0,
            k_ml_db: k_mu,
            k_mn_db: k_mu,
            k_sl_mu_db: k_mu,
            k_sl_mm_db: k_mm,
            k_sn_db: k_mu,
            alpha_ml: 2.0,
            alpha_mn: 4.0,
            alpha_sl_mu: 2.2,
            alpha_sl_mm: 2.1,
            alpha_sn: 4.0,
            g0_db: 30.0,
            theta_deg: 10.0,
            h_m: 10.0,
            noise_figure_db: 7.0,
            bandwidth_mu_mhz: 20.0,
            bandwidth_mm_mhz: 1000.0,
            nakagami_m: 3.0,
        }
    }
}

macro_rules! param_names {
    ($($name:ident),* $(,)?) => {
        /// Every parameter key accepted under `[params]`.
        pub const PARAM_NAMES: &[&str] = &[$(stringify!($name)),*];

        impl HumanParams {
            pub fn get(&self, name: &str) -> Option<f64> {
                match name {
                    $(stringify!($name) => Some(self.$name),)*
                    _ => None,
                }
            }

            pub fn get_mut(&mut self, name: &str) -> Option<&mut f64> {
                match name {
                    $(stringify!($name) => Some(&mut self.$name),)*
                    _ => None,
                }
            }
        }
    };
}

param_names!(
    lambda_m_per_km2,
    lambda_r_per_km2,
    lambda_s_per_km,
    lambda_ou_per_km,
    d_m,
    p_tx_macro_dbm,
    p_tx_small_dbm,
    k_ml_db,
    k_mn_db,
    k_sl_mu_db,
    k_sl_mm_db,
    k_sn_db,
    alpha_ml,
    alpha_mn,
    alpha_sl_mu,
    alpha_sl_mm,
    alpha_sn,
    g0_db,
    theta_deg,
    h_m,
    noise_figure_db,
    bandwidth_mu_mhz,
    bandwidth_mm_mhz,
    nakagami_m,
);

impl HumanParams {
    /// Copy with one parameter replaced; `name` must be in [`PARAM_NAMES`].
    pub fn with(mut self, name: &str, value: f64) -> Self {
        *self.get_mut(name).expect("known parameter name") = value;
        self
    }

    /// Convert to SI linear units.
    pub fn to_system(&self) -> SystemParams {
        SystemParams {
            lambda_m: self.lambda_m_per_km2 / 1e6,
            lambda_r: self.lambda_r_per_km2 / 1e6,
            lambda_s: self.lambda_s_per_km / 1e3,
            lambda_ou: self.lambda_ou_per_km / 1e3,
            d_m: self.d_m,
            p_tx_macro: dbm_to_watts(self.p_tx_macro_dbm),
            p_tx_small: dbm_to_watts(self.p_tx_small_dbm),
            k: PerClass {
                ml: db_to_linear(self.k_ml_db),
                mn: db_to_linear(self.k_mn_db),
                sl_mu: db_to_linear(self.k_sl_mu_db),
                sl_mm: db_to_linear(self.k_sl_mm_db),
                sn: db_to_linear(self.k_sn_db),
            },
            alpha: PerClass {
                ml: self.alpha_ml,
                mn: self.alpha_mn,
                sl_mu: self.alpha_sl_mu,
                sl_mm: self.alpha_sl_mm,
                sn: self.alpha_sn,
            },
            g0: db_to_linear(self.g0_db),
            theta: self.theta_deg.to_radians(),
            h: self.h_m,
            noise_mu: thermal_noise_watts(self.bandwidth_mu_mhz * 1e6, self.noise_figure_db),
            noise_mm: thermal_noise_watts(self.bandwidth_mm_mhz * 1e6, self.noise_figure_db),
            nakagami_m: self.nakagami_m as u32,
        }
    }

    /// Every range violation, as `(parameter, constraint)` pairs.
    pub fn violations(&self) -> Vec<(&'static str, String)> {
        let mut out = Vec::new();
        for &name in PARAM_NAMES {
            let v = self.get(name).unwrap_or(f64::NAN);
            if !v.is_finite() {
                out.push((name, "must be finite".to_string()));
                continue;
            }
            let bad = match name {
                "lambda_m_per_km2" | "lambda_r_per_km2" | "lambda_s_per_km" | "lambda_ou_per_km" | "d_m" | "h_m"
                | "bandwidth_mu_mhz" | "bandwidth_mm_mhz" => (v <= 0.0).then_some("must be > 0"),
                "alpha_ml" | "alpha_sl_mu" | "alpha_sl_mm" => (v < 2.0).then_some("LOS exponents must be >= 2"),
                "alpha_mn" | "alpha_sn" => (v <= 2.0).then_some("NLOS exponents must be > 2"),
                "theta_deg" => (v <= 0.0 || v >= 180.0).then_some("must lie in (0, 180) degrees"),
                "nakagami_m" => (v < 1.0 || v.fract() != 0.0 || v > 64.0).then_some("must be an integer in [1, 64]"),
                _ => None,
            };
            if let Some(c) = bad {
                out.push((name, c.to_string()));
            }
        }
        if out.is_empty() {
            if let Err(e) = self.to_system().validate() {
                let field = match e {
                    ModelError::Parameter { field, .. } => human_name(field),
                    _ => "params",
                };
                out.push((field, e.to_string()));
            }
        }
        out
    }

    /// Beamwidths wider than `2 atan(1/8)` make the spillover window unbounded.
    pub fn warnings(&self) -> Vec<String> {
        if self.to_system().spillover_feasible() {
            Vec::new()
        } else {
            vec![format!(
                "theta_deg = {} violates tan(theta/2) <= 1/8 (theta <= {:.2} deg); the spillover window is extended to infinity",
                self.theta_deg,
                2.0 * (0.125f64).atan().to_degrees()
            )]
        }
    }
}

fn human_name(field: &str) -> &'static str {
    match field {
        "lambda_m" => "lambda_m_per_km2",
        "lambda_r" => "lambda_r_per_km2",
        "lambda_s" => "lambda_s_per_km",
        "lambda_ou" => "lambda_ou_per_km",
        "d_m" => "d_m",
        "theta" => "theta_deg",
        "h" => "h_m",
        "g0" => "g0_db",
        _ => PARAM_NAMES.iter().find(|&&n| n == field).copied().unwrap_or("params"),
    }
}

/// A one-parameter sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Sweep {
    pub parameter: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub experiment: Experiment,
    pub trials: Option<u64>,
    pub seed: u64,
    pub output: Option<PathBuf>,
    /// Relative tolerance of the analytic quadratures.
    pub tolerance: Option<f64>,
    pub mm_form: MmWaveForm,
    pub params: HumanParams,
    pub gamma_db: Option<Vec<f64>>,
    pub sweep: Option<Sweep>,
    /// Accepted but questionable settings.
    pub warnings: Vec<String>,
}

impl Config {
    /// A configuration for `experiment` with every default.
    pub fn new(experiment: Experiment) -> Self {
        Config {
            experiment,
            trials: None,
            seed: 1,
            output: None,
            tolerance: None,
            mm_form: MmWaveForm::Alzer,
            params: HumanParams::default(),
            gamma_db: None,
            sweep: None,
            warnings: Vec::new(),
        }
    }

    pub fn parse(text: &str) -> Result<Config, ConfigError> {
        Parser::new(text)?.run()
    }

    /// The resolved configuration as TOML; parsing it yields `self` back.
    pub fn to_toml(&self) -> String {
        let mut top = Table::new();
        top.insert("experiment".into(), Value::String(self.experiment.name().into()));
        if let Some(t) = self.trials {
            top.insert("trials".into(), Value::Integer(t as i64));
        }
        top.insert("seed".into(), Value::Integer(self.seed as i64));
        if let Some(o) = &self.output {
            top.insert("output".into(), Value::String(o.display().to_string()));
        }
        if let Some(t) = self.tolerance {
            top.insert("tolerance".into(), Value::Float(t));
        }
        let form = match self.mm_form {
            MmWaveForm::Alzer => "alzer",
            MmWaveForm::Simple => "simple",
        };
        top.insert("mm_wave_form".into(), Value::String(form.into()));
        let mut params = Table::new();
        for &name in PARAM_NAMES {
            params.insert(name.into(), Value::Float(self.params.get(name).unwrap_or(f64::NAN)));
        }
        top.insert("params".into(), Value::Table(params));
        if let Some(g) = &self.gamma_db {
            let mut grid = Table::new();
            grid.insert("gamma_db".into(), floats(g));
            top.insert("grid".into(), Value::Table(grid));
        }
        if let Some(s) = &self.sweep {
            let mut sweep = Table::new();
            sweep.insert("parameter".into(), Value::String(s.parameter.clone()));
            sweep.insert("values".into(), floats(&s.values));
            top.insert("sweep".into(), Value::Table(sweep));
        }
        toml::to_string(&top).expect("a TOML table always serializes")
    }
}

fn floats(values: &[f64]) -> Value {
    Value::Array(values.iter().map(|&v| Value::Float(v)).collect())
}

/// One problem found in a configuration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Issue {
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for Issue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}: {}", self.message),
            None => write!(f, "{}", self.message),
        }
    }
}

/// Every problem found in a configuration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub issues: Vec<Issue>,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, issue) in self.issues.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{issue}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigError {}

struct Parser {
    table: Table,
    lines: BTreeMap<String, usize>,
    issues: Vec<Issue>,
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

fn record_lines(text: &str, table: &DeTable<'_>, prefix: &str, out: &mut BTreeMap<String, usize>) {
    for (key, value) in table.iter() {
        let path = if prefix.is_empty() { key.get_ref().to_string() } else { format!("{prefix}.{}", key.get_ref()) };
        out.insert(path.clone(), line_of(text, key.span().start));
        if let DeValue::Table(inner) = value.get_ref() {
            record_lines(text, inner, &path, out);
        }
    }
}

fn as_number(v: &Value) -> Option<f64> {
    match v {
        Value::Float(f) => Some(*f),
        Value::Integer(i) => Some(*i as f64),
        _ => None,
    }
}

impl Parser {
    fn new(text: &str) -> Result<Self, ConfigError> {
        let syntax = |e: toml::de::Error| ConfigError {
            issues: vec![Issue {
                line: e.span().map(|s| line_of(text, s.start)),
                message: e.message().trim().to_string(),
            }],
        };
        let spanned = DeTable::parse(text).map_err(syntax)?;
        let mut lines = BTreeMap::new();
        record_lines(text, spanned.get_ref(), "", &mut lines);
        let table = text.parse::<Table>().map_err(syntax)?;
        Ok(Parser { table, lines, issues: Vec::new() })
    }

    fn error(&mut self, path: &str, message: impl Into<String>) {
        self.issues
            .push(Issue { line: self.lines.get(path).copied(), message: format!("`{path}`: {}", message.into()) });
    }

    fn number(&mut self, path: &str, v: &Value) -> Option<f64> {
        let n = as_number(v);
        if n.is_none() {
            self.error(path, format!("expected a number, found {}", v.type_str()));
        }
        n
    }

    fn integer(&mut self, path: &str, v: &Value, min: i64) -> Option<u64> {
        match v {
            Value::Integer(i) if *i >= min => Some(*i as u64),
            Value::Integer(_) => {
                self.error(path, format!("must be an integer >= {min}"));
                None
            }
            _ => {
                self.error(path, format!("expected an integer, found {}", v.type_str()));
                None
            }
        }
    }

    fn numbers(&mut self, path: &str, v: &Value) -> Option<Vec<f64>> {
        let Value::Array(items) = v else {
            self.error(path, format!("expected an array of numbers, found {}", v.type_str()));
            return None;
        };
        let values: Option<Vec<f64>> = items.iter().map(as_number).collect();
        match values {
            None => {
                self.error(path, "every element must be a number");
                None
            }
            Some(v) if v.is_empty() => {
                self.error(path, "grid must not be empty");
                None
            }
            Some(v) if v.iter().any(|x| !x.is_finite()) => {
                self.error(path, "grid values must be finite");
                None
            }
            Some(v) if v.windows(2).any(|w| w[0] >= w[1]) => {
                self.error(path, "grid must be strictly increasing");
                None
            }
            Some(v) => Some(v),
        }
    }

    fn table<'a>(&mut self, path: &str, v: &'a Value) -> Option<&'a Table> {
        match v {
            Value::Table(t) => Some(t),
            _ => {
                self.error(path, format!("expected a table, found {}", v.type_str()));
                None
            }
        }
    }

    fn run(mut self) -> Result<Config, ConfigError> {
        let top = std::mem::take(&mut self.table);
        let mut config = Config::new(Experiment::Custom);
        let mut experiment = None;
        for (key, value) in &top {
            match key.as_str() {
                "experiment" => match value.as_str().map(Experiment::from_name) {
                    Some(Some(e)) => experiment = Some(e),
                    Some(None) => {
                        let names: Vec<&str> = Experiment::ALL.iter().map(|e| e.name()).collect();
                        self.error(key, format!("unknown experiment; expected one of {}", names.join(", ")));
                    }
                    None => self.error(key, "expected a string"),
                },
                "trials" => config.trials = self.integer(key, value, 1),
                "seed" => config.seed = self.integer(key, value, 0).unwrap_or(config.seed),
                "output" => match value.as_str() {
                    Some(s) => config.output = Some(PathBuf::from(s)),
                    None => self.error(key, "expected a string"),
                },
                "tolerance" => match self.number(key, value) {
                    Some(t) if t > 0.0 && t < 1.0 => config.tolerance = Some(t),
                    Some(_) => self.error(key, "must lie in (0, 1)"),
                    None => {}
                },
                "mm_wave_form" => match value.as_str() {
                    Some("alzer") => config.mm_form = MmWaveForm::Alzer,
                    Some("simple") => config.mm_form = MmWaveForm::Simple,
                    _ => self.error(key, "expected \"alzer\" or \"simple\""),
                },
                "params" => {
                    if let Some(t) = self.table(key, value) {
                        self.params(t, &mut config.params);
                    }
                }
                "grid" => {
                    if let Some(t) = self.table(key, value) {
                        config.gamma_db = self.grid(t);
                    }
                }
                "sweep" => {
                    if let Some(t) = self.table(key, value) {
                        config.sweep = self.sweep(t);
                    }
                }
                _ => self.error(key, "unknown key"),
            }
        }
        match experiment {
            Some(e) => config.experiment = e,
            None if !self.lines.contains_key("experiment") => {
                self.issues.push(Issue { line: None, message: "missing required key `experiment`".into() })
            }
            None => {}
        }
        for (name, constraint) in config.params.violations() {
            let path = format!("params.{name}");
            let value = config.params.get(name).unwrap_or(f64::NAN);
            self.error(&path, format!("value {value} {constraint}"));
        }
        if let Some(sweep) = config.sweep.clone() {
            self.check_sweep(&config, &sweep);
        }
        if self.issues.is_empty() {
            config.warnings = config.params.warnings();
            Ok(config)
        } else {
            self.issues.sort_by_key(|i| i.line.unwrap_or(usize::MAX));
            Err(ConfigError { issues: self.issues })
        }
    }

    fn params(&mut self, table: &Table, params: &mut HumanParams) {
        for (key, value) in table {
            let path = format!("params.{key}");
            let Some(slot) = params.get_mut(key) else {
                self.error(&path, "unknown parameter");
                continue;
            };
            if let Some(v) = as_number(value) {
                *slot = v;
            } else {
                self.error(&path, format!("expected a number, found {}", value.type_str()));
            }
        }
    }

    fn grid(&mut self, table: &Table) -> Option<Vec<f64>> {
        let mut grid = None;
        for (key, value) in table {
            let path = format!("grid.{key}");
            match key.as_str() {
                "gamma_db" => grid = self.numbers(&path, value),
                _ => self.error(&path, "unknown key"),
            }
        }
        grid
    }

    fn sweep(&mut self, table: &Table) -> Option<Sweep> {
        let mut parameter = None;
        let mut values = None;
        for (key, value) in table {
            let path = format!("sweep.{key}");
            match key.as_str() {
                "parameter" => match value.as_str() {
                    Some(p) if PARAM_NAMES.contains(&p) => parameter = Some(p.to_string()),
                    Some(_) => self.error(&path, "unknown parameter name"),
                    None => self.error(&path, "expected a string"),
                },
                "values" => values = self.numbers(&path, value),
                _ => self.error(&path, "unknown key"),
            }
        }
        for (key, present) in [("parameter", table.contains_key("parameter")), ("values", table.contains_key("values"))]
        {
            if !present {
                self.issues.push(Issue {
                    line: self.lines.get("sweep").copied(),
                    message: format!("`sweep` is missing `{key}`"),
                });
            }
        }
        Some(Sweep { parameter: parameter?, values: values? })
    }

    fn check_sweep(&mut self, config: &Config, sweep: &Sweep) {
        match config.experiment.sweep_parameter() {
            Some(expected) if expected != sweep.parameter => {
                self.error("sweep.parameter", format!("{} sweeps `{expected}`", config.experiment.name()));
            }
            None if config.experiment != Experiment::Custom => {
                self.error("sweep", format!("{} takes no sweep", config.experiment.name()));
            }
            _ => {}
        }
        for &v in &sweep.values {
            let trial = config.params.with(&sweep.parameter, v);
            if let Some((_, c)) = trial.violations().into_iter().next() {
                self.error("sweep.values", format!("value {v} of `{}` {c}", sweep.parameter));
                break;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_the_model_defaults() {
        assert_eq!(HumanParams::default().to_system(), SystemParams::default());
    }

    #[test]
    fn every_name_resolves() {
        let p = HumanParams::default();
        for &n in PARAM_NAMES {
            assert!(p.get(n).is_some(), "{n}");
        }
        assert!(p.get("lambda_s").is_none());
    }
}
