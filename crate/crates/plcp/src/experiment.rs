//! Named experiments. Each one evaluates the analytic engine and the
//! simulator over its grid and returns a table of rows.

use anyhow::{anyhow, bail, Context, Result};
use plcp_core::coverage::{mmwave_selection_probability, tier_probabilities, Analyzer, CoverageError};
use plcp_core::model::{db_to_linear, LinkClass, SystemParams};
use rayon::prelude::*;

use crate::config::{Config, HumanParams};
use crate::estimate::{self, Estimate};
use crate::sim::{InterferenceModel, Simulator, TrialOutcome};
use crate::table::{Cell, Chart, Table};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Experiment {
    Fig2Validation,
    Fig3InterferenceModels,
    Fig4AssociationSweep,
    Fig5RatSelection,
    Fig6CoverageSweep,
    Fig7MmGain,
    Custom,
}

impl Experiment {
    pub const ALL: [Experiment; 7] = [
        Self::Fig2Validation,
        Self::Fig3InterferenceModels,
        Self::Fig4AssociationSweep,
        Self::Fig5RatSelection,
        Self::Fig6CoverageSweep,
        Self::Fig7MmGain,
        Self::Custom,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Fig2Validation => "fig2_validation",
            Self::Fig3InterferenceModels => "fig3_interference_models",
            Self::Fig4AssociationSweep => "fig4_association_sweep",
            Self::Fig5RatSelection => "fig5_rat_selection",
            Self::Fig6CoverageSweep => "fig6_coverage_sweep",
            Self::Fig7MmGain => "fig7_mm_gain",
            Self::Custom => "custom",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|e| e.name() == name)
    }

    pub fn description(self) -> &'static str {
        match self {
            Self::Fig2Validation => "overall SINR coverage against threshold, analytic and simulated",
            Self::Fig3InterferenceModels => "mm-wave coverage under full, dominant-interferer and noise-limited models",
            Self::Fig4AssociationSweep => "association probabilities against small-cell density for two road densities",
            Self::Fig5RatSelection => {
                "probability that the nearest small cell uses mm-wave, against density and antenna gain"
            }
            Self::Fig6CoverageSweep => "overall coverage against threshold for several road densities",
            Self::Fig7MmGain => "coverage gain of a 30 dB over a 20 dB mm-wave antenna against small-cell density",
            Self::Custom => "overall coverage over the threshold grid, optionally swept over one parameter",
        }
    }

    /// The parameter a `[sweep]` section overrides, if the experiment has one.
    pub fn sweep_parameter(self) -> Option<&'static str> {
        match self {
            Self::Fig4AssociationSweep | Self::Fig5RatSelection | Self::Fig7MmGain => Some("lambda_s_per_km"),
            Self::Fig6CoverageSweep => Some("lambda_r_per_km2"),
            Self::Fig2Validation | Self::Fig3InterferenceModels | Self::Custom => None,
        }
    }

    pub fn default_trials(self) -> u64 {
        match self {
            Self::Fig2Validation | Self::Fig3InterferenceModels | Self::Fig5RatSelection => 20_000,
            _ => 10_000,
        }
    }

    pub fn default_gamma_db(self) -> Vec<f64> {
        let grid = |lo: f64, hi: f64, step: f64| {
            let n = ((hi - lo) / step).round() as usize;
            (0..=n).map(|k| lo + step * k as f64).collect::<Vec<_>>()
        };
        match self {
            Self::Fig3InterferenceModels => grid(-10.0, 30.0, 2.5),
            Self::Fig7MmGain => vec![-10.0],
            Self::Fig4AssociationSweep | Self::Fig5RatSelection => Vec::new(),
            _ => grid(-20.0, 30.0, 2.5),
        }
    }

    pub fn default_sweep(self) -> Vec<f64> {
        match self {
            Self::Fig4AssociationSweep => vec![1.0, 2.0, 5.0, 10.0, 20.0, 50.0, 100.0, 200.0, 500.0],
            Self::Fig5RatSelection => vec![0.1, 0.2, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0],
            Self::Fig6CoverageSweep => vec![10.0, 50.0],
            Self::Fig7MmGain => vec![0.1, 0.2, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0, 50.0, 100.0, 200.0, 500.0, 1000.0],
            _ => Vec::new(),
        }
    }
}

/// Which engines to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Engines {
    pub analytic: bool,
    pub simulate: bool,
}

impl Default for Engines {
    fn default() -> Self {
        Engines { analytic: true, simulate: true }
    }
}

/// A configuration with every default filled in.
#[derive(Debug, Clone)]
pub struct Plan {
    pub config: Config,
    pub trials: u64,
    pub gamma_db: Vec<f64>,
    pub sweep: Vec<f64>,
    pub engines: Engines,
}

impl Plan {
    pub fn new(config: &Config, engines: Engines) -> Self {
        let e = config.experiment;
        Plan {
            trials: config.trials.unwrap_or(e.default_trials()),
            gamma_db: config.gamma_db.clone().unwrap_or_else(|| e.default_gamma_db()),
            sweep: config.sweep.as_ref().map(|s| s.values.clone()).unwrap_or_else(|| e.default_sweep()),
            config: config.clone(),
            engines,
        }
    }

    fn analyzer(&self, params: &SystemParams) -> Result<Analyzer> {
        let mut a = Analyzer::new(params).map_err(op("analytic setup"))?.with_mm_form(self.config.mm_form);
        if let Some(t) = self.config.tolerance {
            a = a.with_tolerance(t);
        }
        Ok(a)
    }

    fn simulate(&self, params: &SystemParams) -> Result<Vec<TrialOutcome>> {
        let sim = Simulator::new(params, self.config.seed).map_err(|e| anyhow!("simulator setup: {e}"))?;
        Ok(sim.run(self.trials))
    }
}

fn op(name: &'static str) -> impl Fn(CoverageError) -> anyhow::Error {
    move |e| anyhow!("{name}: {e}")
}

fn num(v: f64) -> Cell {
    Cell::Num(v)
}

fn maybe(v: Option<f64>) -> Cell {
    v.map_or(Cell::Empty, Cell::Num)
}

fn est(e: Option<&Estimate>) -> [Cell; 2] {
    match e {
        Some(e) => [Cell::Num(e.mean), Cell::Num(e.stderr)],
        None => [Cell::Empty, Cell::Empty],
    }
}

fn gap(a: Option<f64>, s: Option<&Estimate>) -> Cell {
    match (a, s) {
        (Some(a), Some(s)) => Cell::Num(a - s.mean),
        _ => Cell::Empty,
    }
}

/// Analytic overall coverage at each threshold, evaluated in parallel.
fn analytic_curve(analyzer: &Analyzer, gamma_db: &[f64]) -> Result<Vec<f64>> {
    gamma_db
        .par_iter()
        .map(|&g| {
            analyzer
                .coverage_at(db_to_linear(g))
                .map(|(_, overall)| overall)
                .map_err(|e| anyhow!("analytic coverage at {g} dB: {e}"))
        })
        .collect()
}

fn conditional_curve(analyzer: &Analyzer, class: LinkClass, gamma_db: &[f64]) -> Result<Vec<f64>> {
    gamma_db
        .par_iter()
        .map(|&g| {
            analyzer
                .conditional_coverage(class, db_to_linear(g))
                .map_err(|e| anyhow!("analytic {class} coverage at {g} dB: {e}"))
        })
        .collect()
}

/// The table an experiment produces and how to chart it.
#[derive(Debug, Clone)]
pub struct Output {
    pub table: Table,
    pub chart: Chart,
    pub notes: Vec<String>,
}

pub fn run(plan: &Plan) -> Result<Output> {
    let out = match plan.config.experiment {
        Experiment::Fig2Validation => coverage_curve(plan, None)?,
        Experiment::Custom => match &plan.config.sweep {
            Some(s) => coverage_curve(plan, Some(s.parameter.as_str()))?,
            None => coverage_curve(plan, None)?,
        },
        Experiment::Fig6CoverageSweep => coverage_curve(plan, Some("lambda_r_per_km2"))?,
        Experiment::Fig3InterferenceModels => interference_models(plan)?,
        Experiment::Fig4AssociationSweep => association_sweep(plan)?,
        Experiment::Fig5RatSelection => rat_selection(plan)?,
        Experiment::Fig7MmGain => mm_gain(plan)?,
    };
    Ok(out)
}

fn require_grid(plan: &Plan) -> Result<()> {
    if plan.gamma_db.is_empty() {
        bail!("{} needs a non-empty [grid] gamma_db", plan.config.experiment.name());
    }
    Ok(())
}

/// Overall coverage against threshold, optionally for each value of `axis`.
fn coverage_curve(plan: &Plan, axis: Option<&str>) -> Result<Output> {
    require_grid(plan)?;
    let points: Vec<Option<f64>> = match axis {
        Some(_) => plan.sweep.iter().copied().map(Some).collect(),
        None => vec![None],
    };
    let mut columns: Vec<String> = Vec::new();
    if let Some(a) = axis {
        columns.push(a.to_string());
    }
    columns.extend(["gamma_db", "analytic", "simulated", "stderr", "gap"].map(String::from));
    let mut table = Table::new(columns);
    for point in points {
        let human = match (axis, point) {
            (Some(a), Some(v)) => plan.config.params.with(a, v),
            _ => plan.config.params,
        };
        let params = human.to_system();
        let analytic = if plan.engines.analytic {
            Some(analytic_curve(&plan.analyzer(&params)?, &plan.gamma_db).context("coverage curve")?)
        } else {
            None
        };
        let simulated = if plan.engines.simulate {
            let outcomes = plan.simulate(&params)?;
            Some(estimate::coverage(&outcomes, &plan.gamma_db, InterferenceModel::Full).overall)
        } else {
            None
        };
        for (k, &g) in plan.gamma_db.iter().enumerate() {
            let a = analytic.as_ref().map(|v| v[k]);
            let s = simulated.as_ref().map(|v| &v[k]);
            let mut row = Vec::new();
            if let Some(v) = point {
                row.push(num(v));
            }
            row.push(num(g));
            row.push(maybe(a));
            row.extend(est(s));
            row.push(gap(a, s));
            table.push(row);
        }
    }
    let chart = Chart {
        title: plan.config.experiment.description().to_string(),
        x: "gamma_db".into(),
        y: vec!["analytic".into(), "simulated".into()],
        group: axis.map(String::from),
        log_x: false,
        y_label: "coverage probability".into(),
    };
    Ok(Output { table, chart, notes: Vec::new() })
}

/// mm-wave coverage of users served over mm-wave under each interference model.
fn interference_models(plan: &Plan) -> Result<Output> {
    require_grid(plan)?;
    let params = plan.config.params.to_system();
    let analytic = if plan.engines.analytic {
        Some(conditional_curve(&plan.analyzer(&params)?, LinkClass::SL_MM, &plan.gamma_db)?)
    } else {
        None
    };
    let outcomes = if plan.engines.simulate { Some(plan.simulate(&params)?) } else { None };
    let mut table =
        Table::new(["model", "gamma_db", "analytic", "simulated", "stderr", "gap"].map(String::from).to_vec());
    let mut notes = Vec::new();
    if let Some(o) = &outcomes {
        let served = o.iter().filter(|t| t.class == LinkClass::SL_MM).count();
        notes.push(format!("{served} of {} trials were served over mm-wave", o.len()));
    }
    for model in InterferenceModel::ALL {
        let sim = outcomes.as_ref().map(|o| estimate::coverage(o, &plan.gamma_db, model).per_class.sl_mm);
        for (k, &g) in plan.gamma_db.iter().enumerate() {
            let a = analytic.as_ref().map(|v| v[k]);
            let s = sim.as_ref().map(|v| &v[k]);
            let mut row = vec![Cell::Text(model.label().into()), num(g), maybe(a)];
            row.extend(est(s));
            row.push(gap(a, s));
            table.push(row);
        }
    }
    let chart = Chart {
        title: plan.config.experiment.description().to_string(),
        x: "gamma_db".into(),
        y: vec!["simulated".into(), "analytic".into()],
        group: Some("model".into()),
        log_x: false,
        y_label: "mm-wave coverage probability".into(),
    };
    Ok(Output { table, chart, notes })
}

const ROAD_DENSITIES_PER_KM2: [f64; 2] = [10.0, 50.0];

fn association_sweep(plan: &Plan) -> Result<Output> {
    let mut table = Table::new(
        ["lambda_r_per_km2", "lambda_s_per_km", "class", "analytic", "simulated", "stderr", "gap"]
            .map(String::from)
            .to_vec(),
    );
    for lr in ROAD_DENSITIES_PER_KM2 {
        for &ls in &plan.sweep {
            let human = plan.config.params.with("lambda_r_per_km2", lr).with("lambda_s_per_km", ls);
            let params = human.to_system();
            let report = if plan.engines.analytic {
                Some(tier_probabilities(&params).map_err(op("association"))?)
            } else {
                None
            };
            let outcomes = if plan.engines.simulate { Some(plan.simulate(&params)?) } else { None };
            let freq = |pred: fn(LinkClass) -> bool| outcomes.as_deref().map(|o| estimate::class_frequency(o, pred));
            let rows: [(&str, Option<f64>, Option<Estimate>); 4] = [
                ("ML", report.map(|r| r.p_ml), freq(|c| c == LinkClass::ML)),
                ("MN", report.map(|r| r.p_mn), freq(|c| c == LinkClass::MN)),
                ("SL", report.map(|r| r.p_sl), freq(|c| c == LinkClass::SL_MU || c == LinkClass::SL_MM)),
                ("SN", report.map(|r| r.p_sn), freq(|c| c == LinkClass::SN)),
            ];
            for (label, a, s) in rows {
                let mut row = vec![num(lr), num(ls), Cell::Text(label.into()), maybe(a)];
                row.extend(est(s.as_ref()));
                row.push(gap(a, s.as_ref()));
                table.push(row);
            }
        }
    }
    let chart = Chart {
        title: plan.config.experiment.description().to_string(),
        x: "lambda_s_per_km".into(),
        y: vec!["analytic".into(), "simulated".into()],
        group: Some("class".into()),
        log_x: true,
        y_label: "association probability".into(),
    };
    Ok(Output { table, chart, notes: vec!["rows are repeated for each road density lambda_r_per_km2".into()] })
}

const RAT_GAINS_DB: [f64; 3] = [24.0, 25.0, 26.0];

fn rat_selection(plan: &Plan) -> Result<Output> {
    let mut table = Table::new(
        [
            "g0_db",
            "lambda_s_per_km",
            "analytic",
            "simulated",
            "stderr",
            "gap",
            "conditional_analytic",
            "conditional_simulated",
            "conditional_stderr",
        ]
        .map(String::from)
        .to_vec(),
    );
    for g0 in RAT_GAINS_DB {
        for &ls in &plan.sweep {
            let params = plan.config.params.with("g0_db", g0).with("lambda_s_per_km", ls).to_system();
            let (a, cond_a) = if plan.engines.analytic {
                let p = mmwave_selection_probability(&params).map_err(op("mm-wave selection probability"))?;
                let r = tier_probabilities(&params).map_err(op("association"))?;
                (Some(p), Some(r.p_m_given_sl))
            } else {
                (None, None)
            };
            let (s, cond_s) = if plan.engines.simulate {
                let o = plan.simulate(&params)?;
                (Some(estimate::nearest_typical_mm(&o)), Some(estimate::mm_given_typical(&o)))
            } else {
                (None, None)
            };
            let mut row = vec![num(g0), num(ls), maybe(a)];
            row.extend(est(s.as_ref()));
            row.push(gap(a, s.as_ref()));
            row.push(maybe(cond_a));
            row.extend(est(cond_s.as_ref()));
            table.push(row);
        }
    }
    let chart = Chart {
        title: plan.config.experiment.description().to_string(),
        x: "lambda_s_per_km".into(),
        y: vec!["analytic".into(), "simulated".into()],
        group: Some("g0_db".into()),
        log_x: true,
        y_label: "mm-wave selection probability".into(),
    };
    Ok(Output { table, chart, notes: Vec::new() })
}

const GAIN_PAIR_DB: [f64; 2] = [20.0, 30.0];

fn mm_gain(plan: &Plan) -> Result<Output> {
    require_grid(plan)?;
    let mut table = Table::new(
        ["gamma_db", "lambda_s_per_km", "series", "analytic", "simulated", "stderr"].map(String::from).to_vec(),
    );
    for &ls in &plan.sweep {
        let at = |g0: f64| -> HumanParams { plan.config.params.with("g0_db", g0).with("lambda_s_per_km", ls) };
        let (lo, hi) = (at(GAIN_PAIR_DB[0]).to_system(), at(GAIN_PAIR_DB[1]).to_system());
        let analytic = if plan.engines.analytic {
            Some((
                analytic_curve(&plan.analyzer(&lo)?, &plan.gamma_db)?,
                analytic_curve(&plan.analyzer(&hi)?, &plan.gamma_db)?,
            ))
        } else {
            None
        };
        let outcomes = if plan.engines.simulate { Some((plan.simulate(&lo)?, plan.simulate(&hi)?)) } else { None };
        for (k, &g) in plan.gamma_db.iter().enumerate() {
            let sims = outcomes.as_ref().map(|(a, b)| {
                let c = |o: &[TrialOutcome]| estimate::coverage(o, &[g], InterferenceModel::Full).overall[0];
                (c(a), c(b), estimate::paired_difference(a, b, g, InterferenceModel::Full))
            });
            let an = analytic.as_ref().map(|(a, b)| (a[k], b[k], b[k] - a[k]));
            let series: [(&str, Option<f64>, Option<Estimate>); 3] = [
                ("g0_20_db", an.map(|v| v.0), sims.map(|v| v.0)),
                ("g0_30_db", an.map(|v| v.1), sims.map(|v| v.1)),
                ("gain", an.map(|v| v.2), sims.map(|v| v.2)),
            ];
            for (label, a, s) in series {
                let mut row = vec![num(g), num(ls), Cell::Text(label.into()), maybe(a)];
                row.extend(est(s.as_ref()));
                table.push(row);
            }
        }
    }
    let chart = Chart {
        title: plan.config.experiment.description().to_string(),
        x: "lambda_s_per_km".into(),
        y: vec!["analytic".into(), "simulated".into()],
        group: Some("series".into()),
        log_x: true,
        y_label: "coverage probability".into(),
    };
    Ok(Output { table, chart, notes: Vec::new() })
}
