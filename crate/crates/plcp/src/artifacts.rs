//! Running an experiment to files: CSV table, SVG chart and JSON manifest.

use anyhow::{bail, Context, Result};
use serde_json::json;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use crate::config::{Config, PARAM_NAMES};
use crate::experiment::{self, Engines, Plan};
use crate::sim::default_window;
use crate::table::{render_svg, Table};

/// Paths written by [`run_to_dir`].
#[derive(Debug, Clone, PartialEq)]
pub struct Artifacts {
    pub csv: PathBuf,
    pub svg: PathBuf,
    pub manifest: PathBuf,
    pub notes: Vec<String>,
}

/// A configuration as loaded from disk, either TOML or a previous run's
/// manifest, together with the engines the manifest recorded.
pub fn load(path: &Path) -> Result<(Config, Option<Engines>)> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    if text.trim_start().starts_with('{') {
        let manifest: serde_json::Value =
            serde_json::from_str(&text).with_context(|| format!("parsing manifest {}", path.display()))?;
        let Some(config) = manifest.get("config").and_then(|c| c.as_str()) else {
            bail!("{} is JSON but has no `config` string", path.display());
        };
        let engines = manifest.get("engines").map(|e| Engines {
            analytic: e.get("analytic").and_then(|v| v.as_bool()).unwrap_or(true),
            simulate: e.get("simulate").and_then(|v| v.as_bool()).unwrap_or(true),
        });
        return Ok((Config::parse(config)?, engines));
    }
    Ok((Config::parse(&text)?, None))
}

/// Run `config` and write `<name>.csv`, `<name>.svg` and `manifest.json`
/// into `dir`.
pub fn run_to_dir(config: &Config, engines: Engines, dir: &Path) -> Result<Artifacts> {
    let start = Instant::now();
    let plan = Plan::new(config, engines);
    let output = experiment::run(&plan).with_context(|| format!("experiment {}", config.experiment.name()))?;
    let wall = start.elapsed().as_secs_f64();

    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let name = config.experiment.name();
    let csv = dir.join(format!("{name}.csv"));
    let svg = dir.join(format!("{name}.svg"));
    let manifest = dir.join("manifest.json");

    let mut bytes = Vec::new();
    output.table.write_csv(&mut bytes)?;
    fs::write(&csv, &bytes).with_context(|| format!("writing {}", csv.display()))?;
    let from_disk = Table::read_csv(fs::File::open(&csv)?)?;
    fs::write(&svg, render_svg(&from_disk, &output.chart)?).with_context(|| format!("writing {}", svg.display()))?;

    let human: serde_json::Map<String, serde_json::Value> =
        PARAM_NAMES.iter().map(|&n| (n.to_string(), json!(config.params.get(n)))).collect();
    let si = config.params.to_system();
    let doc = json!({
        "experiment": name,
        "seed": config.seed,
        "trials": plan.trials,
        "gamma_db": plan.gamma_db,
        "sweep": plan.sweep,
        "engines": { "analytic": engines.analytic, "simulate": engines.simulate },
        "params": human,
        "params_si": {
            "lambda_m": si.lambda_m,
            "lambda_r": si.lambda_r,
            "lambda_s": si.lambda_s,
            "lambda_ou": si.lambda_ou,
            "d_m": si.d_m,
            "p_tx_macro_w": si.p_tx_macro,
            "p_tx_small_w": si.p_tx_small,
            "k": [si.k.ml, si.k.mn, si.k.sl_mu, si.k.sl_mm, si.k.sn],
            "alpha": [si.alpha.ml, si.alpha.mn, si.alpha.sl_mu, si.alpha.sl_mm, si.alpha.sn],
            "class_order": ["ML", "MN", "SL_MU", "SL_MM", "SN"],
            "g0": si.g0,
            "theta_rad": si.theta,
            "h": si.h,
            "noise_mu_w": si.noise_mu,
            "noise_mm_w": si.noise_mm,
            "nakagami_m": si.nakagami_m,
            "window_radius": default_window(&si),
        },
        "versions": {
            "plcp": env!("CARGO_PKG_VERSION"),
            "plcp-core": env!("CARGO_PKG_VERSION"),
        },
        "wall_time_s": wall,
        "warnings": config.warnings,
        "notes": output.notes,
        "outputs": { "csv": file_name(&csv), "svg": file_name(&svg) },
        "config": config.to_toml(),
    });
    fs::write(&manifest, serde_json::to_string_pretty(&doc)? + "\n")
        .with_context(|| format!("writing {}", manifest.display()))?;
    Ok(Artifacts { csv, svg, manifest, notes: output.notes })
}

fn file_name(p: &Path) -> String {
    p.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}
