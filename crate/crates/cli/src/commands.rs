//! The `solve` and `map` verbs.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde_json::{json, Value};

use olim::{error_metrics, gradient, solve, trace_map, SolutionGrid, Vec2};

use crate::config::{OutputFormat, RunConfig};
use crate::grid_io::{read_grid, write_grid_csv, write_grid_raw, write_path_csv};
use crate::problem::Problem;
use crate::CliError;

fn prefixed(prefix: &str, suffix: &str) -> PathBuf {
    PathBuf::from(format!("{prefix}{suffix}"))
}

fn ensure_parent(path: &Path) -> Result<(), CliError> {
    match path.parent() {
        Some(dir) if !dir.as_os_str().is_empty() => {
            fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))
        }
        _ => Ok(()),
    }
}

fn write_json(path: &Path, v: &Value) -> Result<(), CliError> {
    fs::write(path, serde_json::to_string_pretty(v).unwrap() + "\n")
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn config_echo(cfg: &RunConfig) -> Value {
    let map = cfg.to_map();
    let mut obj = serde_json::Map::new();
    for key in crate::config::KEYS {
        if let Some(v) = map.get(key) {
            obj.insert(key.to_string(), Value::String(v.to_string()));
        }
    }
    Value::Object(obj)
}

/// Solve with the wall-clock time of the solve call alone.
fn timed_solve(p: &Problem) -> Result<(SolutionGrid, f64), CliError> {
    let t = Instant::now();
    let grid = solve(&p.mesh, &p.field, &p.solver)?;
    Ok((grid, t.elapsed().as_secs_f64()))
}

pub struct SolveOutput {
    pub grid: SolutionGrid,
    pub summary: Value,
    pub artifacts: Vec<PathBuf>,
}

pub fn cmd_solve(cfg: &RunConfig) -> Result<SolveOutput, CliError> {
    let p = Problem::build(cfg)?;
    let (grid, seconds) = timed_solve(&p)?;

    let grid_path = prefixed(&cfg.out_prefix, "_grid.csv");
    ensure_parent(&grid_path)?;
    let mut artifacts = match cfg.format {
        OutputFormat::Csv => {
            write_grid_csv(&grid, &grid_path)?;
            vec![grid_path]
        }
        OutputFormat::Raw => write_grid_raw(&grid, Path::new(&cfg.out_prefix))?,
    };

    let errors = p.exact.map(|e| error_metrics(&grid, |x| e.value(x)));
    let summary_path = prefixed(&cfg.out_prefix, "_summary.json");
    artifacts.push(summary_path.clone());
    let summary = json!({
        "command": "solve",
        "config": config_echo(cfg),
        "resolved": {
            "K": p.solver.k,
            "domain": p.domain,
            "h1": p.mesh.h1(),
            "h2": p.mesh.h2(),
            "field": p.field.name(),
            "exact": p.exact.map(|e| e.name()),
        },
        "solve_seconds": seconds,
        "stats": grid.stats(),
        "finalized": grid.finalized_count(),
        "non_final": grid.non_final_count(),
        "errors": errors,
        "warnings": p.warnings,
        "artifacts": artifacts.iter().map(|a| a.display().to_string()).collect::<Vec<_>>(),
    });
    write_json(&summary_path, &summary)?;
    Ok(SolveOutput { grid, summary, artifacts })
}

pub struct MapOutput {
    pub path: olim::Path,
    pub action: f64,
    pub summary: Value,
    pub artifacts: Vec<PathBuf>,
}

/// Traces the MAP from `start`, on `grid_file` if given, else on a fresh solve.
pub fn cmd_map(cfg: &RunConfig, start: Vec2, grid_file: Option<&Path>) -> Result<MapOutput, CliError> {
    let p = Problem::build(cfg)?;
    if !start.is_finite() || !p.mesh.contains(start) {
        return Err(CliError::Usage(format!("start ({}, {}) is outside the domain", start.x, start.y)));
    }
    let (grid, seconds) = match grid_file {
        Some(f) => (read_grid(f)?, None),
        None => {
            let (g, s) = timed_solve(&p)?;
            (g, Some(s))
        }
    };
    let path = trace_map(&grid, &gradient(&grid), &p.field, &p.solver.init, start)
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let action = path.action(&p.field)?;

    let csv_path = prefixed(&cfg.out_prefix, "_map.csv");
    ensure_parent(&csv_path)?;
    write_path_csv(&path.points, &csv_path)?;
    let summary_path = prefixed(&cfg.out_prefix, "_map.json");
    let summary = json!({
        "command": "map",
        "config": config_echo(cfg),
        "grid_file": grid_file.map(|f| f.display().to_string()),
        "solve_seconds": seconds,
        "start": [start.x, start.y],
        "status": path.status,
        "points": path.points.len(),
        "length": path.length(),
        "step": path.step,
        "action": action,
        "exact_at_start": p.exact.map(|e| e.value(start)),
        "artifacts": [csv_path.display().to_string(), summary_path.display().to_string()],
    });
    write_json(&summary_path, &summary)?;
    Ok(MapOutput { path, action, summary, artifacts: vec![csv_path, summary_path] })
}
