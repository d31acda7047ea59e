//! Parameter grids over scenario fields.
//!
//! A grid axis is a dotted path into the scenario (`platform.theta`,
//! `job_creators.0.p_v`) with a list of values. `*` in place of an index sets
//! every element. The short names `theta`, `n`, `p_a`, `p_v` and `p_e` map to
//! the platform and to every creator or provider.

use std::io::{self, Write};

use rayon::prelude::*;
use toml::Value;

use super::config::ScenarioConfig;
use super::runner::run_scenario;
use super::SimError;
use crate::game::{equilibrium_pe, equilibrium_pv, min_optimal_pa};

#[derive(Debug, Clone, PartialEq)]
pub struct GridAxis {
    pub key: String,
    pub values: Vec<Value>,
}

impl GridAxis {
    /// Parses `key=v1,v2,...`. Each value is read as a TOML literal, falling
    /// back to a bare string.
    pub fn parse(spec: &str) -> Result<GridAxis, SimError> {
        let (key, values) = spec
            .split_once('=')
            .ok_or_else(|| SimError::Grid(format!("`{spec}` is not key=v1,v2,...")))?;
        let key = key.trim();
        if key.is_empty() {
            return Err(SimError::Grid(format!("`{spec}` has an empty key")));
        }
        let values = values
            .split(',')
            .map(str::trim)
            .filter(|v| !v.is_empty())
            .map(parse_value)
            .collect::<Vec<_>>();
        if values.is_empty() {
            return Err(SimError::Grid(format!("`{key}` has no values")));
        }
        Ok(GridAxis {
            key: key.to_string(),
            values,
        })
    }
}

fn parse_value(text: &str) -> Value {
    toml::from_str::<toml::Table>(&format!("v = {text}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| Value::String(text.to_string()))
}

fn expand_alias(key: &str) -> String {
    match key {
        "theta" | "n" => format!("platform.{key}"),
        "p_a" | "p_v" => format!("job_creators.*.{key}"),
        "p_e" => format!("resource_providers.*.{key}"),
        other => other.to_string(),
    }
}

fn set_path(root: &mut Value, path: &[&str], value: &Value, full: &str) -> Result<(), SimError> {
    let unknown = || SimError::UnknownField(full.to_string());
    let (head, rest) = path.split_first().ok_or_else(unknown)?;
    match root {
        Value::Table(t) => {
            if rest.is_empty() {
                t.insert(head.to_string(), value.clone());
                return Ok(());
            }
            let child = t.get_mut(*head).ok_or_else(unknown)?;
            set_path(child, rest, value, full)
        }
        Value::Array(items) => {
            if rest.is_empty() {
                return Err(unknown());
            }
            if *head == "*" {
                if items.is_empty() {
                    return Err(unknown());
                }
                for item in items.iter_mut() {
                    set_path(item, rest, value, full)?;
                }
                return Ok(());
            }
            let index: usize = head.parse().map_err(|_| unknown())?;
            let child = items.get_mut(index).ok_or_else(unknown)?;
            set_path(child, rest, value, full)
        }
        _ => Err(unknown()),
    }
}

/// `template` with each `(key, value)` applied, validated.
pub fn apply_assignments(
    template: &ScenarioConfig,
    assignments: &[(&str, &Value)],
) -> Result<ScenarioConfig, SimError> {
    let mut root = Value::try_from(template).expect("scenario converts to a TOML value");
    for (key, value) in assignments {
        let path = expand_alias(key);
        let parts: Vec<&str> = path.split('.').collect();
        set_path(&mut root, &parts, value, key)?;
    }
    let config: ScenarioConfig = root.try_into().map_err(|e: toml::de::Error| {
        let msg = e.message().to_string();
        if msg.contains("unknown field") {
            SimError::UnknownField(msg)
        } else {
            SimError::ConfigInvalid(msg)
        }
    })?;
    config.validate()?;
    Ok(config)
}

pub const METRIC_COLUMNS: [&str; 13] = [
    "jobs",
    "matches",
    "closed",
    "timed_out",
    "mediations",
    "mediation_rate",
    "verification_rate",
    "conservation_residual",
    "pred_min_optimal_pa",
    "pred_p_v",
    "pred_p_e",
    "pred_mediation_rate",
    "stalled",
];

#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl SweepTable {
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "{}", self.header.join(","))?;
        for row in &self.rows {
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("write to memory");
        String::from_utf8(buf).expect("csv is utf-8")
    }

    pub fn column(&self, name: &str) -> Option<Vec<&str>> {
        let i = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[i].as_str()).collect())
    }
}

fn cell(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

/// Row-major points of the grid: the last axis varies fastest.
fn points(grid: &[GridAxis]) -> Vec<Vec<usize>> {
    if grid.is_empty() {
        return Vec::new();
    }
    let mut out = vec![Vec::new()];
    for axis in grid {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                (0..axis.values.len()).map(move |i| {
                    let mut p = prefix.clone();
                    p.push(i);
                    p
                })
            })
            .collect();
    }
    out
}

fn run_point(
    template: &ScenarioConfig,
    grid: &[GridAxis],
    point: &[usize],
) -> Result<Vec<String>, SimError> {
    let assignments: Vec<(&str, &Value)> = grid
        .iter()
        .zip(point)
        .map(|(axis, &i)| (axis.key.as_str(), &axis.values[i]))
        .collect();
    let config = apply_assignments(template, &assignments)?;
    let out = run_scenario(&config, config.seed)?;
    let m = &out.metrics;
    let game = config.game_params()?;
    let strategy = &config.job_creators[0];
    let pred_min_pa = min_optimal_pa(config.platform.n, config.platform.theta as f64).ok();
    let pred_pv = equilibrium_pv(&game).ok().map(|x| x.value);
    let pred_pe = equilibrium_pe(&game).ok().map(|x| x.value);
    let anomaly = if strategy.reject_on_anomaly {
        1.0 - game.p_a
    } else {
        0.0
    };
    let pred_rate =
        game.p_v * ((1.0 - game.p_e) * strategy.detection_probability + game.p_e * anomaly);
    let mut row: Vec<String> = assignments.iter().map(|(_, v)| cell(v)).collect();
    row.extend([
        m.jobs.to_string(),
        m.matches.to_string(),
        m.closed.to_string(),
        m.timed_out.to_string(),
        m.mediations.to_string(),
        m.mediation_rate().to_string(),
        m.verification_rate().to_string(),
        m.conservation_residual.to_string(),
        opt(pred_min_pa),
        opt(pred_pv),
        opt(pred_pe),
        pred_rate.to_string(),
        m.stalled.to_string(),
    ]);
    Ok(row)
}

/// One row per grid point in row-major order. Points run in parallel; the
/// row order does not depend on scheduling. An empty grid gives a
/// header-only table.
pub fn sweep(template: &ScenarioConfig, grid: &[GridAxis]) -> Result<SweepTable, SimError> {
    let mut header: Vec<String> = grid.iter().map(|a| a.key.clone()).collect();
    header.extend(METRIC_COLUMNS.iter().map(|s| s.to_string()));
    let pts = points(grid);
    // Fail fast on bad keys before spending time on runs.
    if let Some(first) = pts.first() {
        let assignments: Vec<(&str, &Value)> = grid
            .iter()
            .zip(first)
            .map(|(axis, &i)| (axis.key.as_str(), &axis.values[i]))
            .collect();
        apply_assignments(template, &assignments)?;
    }
    let rows = pts
        .par_iter()
        .map(|p| run_point(template, grid, p))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(SweepTable { header, rows })
}

/// [`sweep`] without the thread pool, for checking that both agree.
pub fn sweep_sequential(
    template: &ScenarioConfig,
    grid: &[GridAxis],
) -> Result<SweepTable, SimError> {
    let mut header: Vec<String> = grid.iter().map(|a| a.key.clone()).collect();
    header.extend(METRIC_COLUMNS.iter().map(|s| s.to_string()));
    let rows = points(grid)
        .iter()
        .map(|p| run_point(template, grid, p))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(SweepTable { header, rows })
}
