//! Grid and path files.
//!
//! CSV grids have the header `i,j,x1,x2,U,state,update_length`, one row per
//! mesh point in index order (`idx = i * n2 + j`, `i` along `x1`). Floats use
//! 17 significant digits; unset values and unrecorded lengths are empty.
//!
//! Raw grids are little-endian arrays in the same order: `<prefix>_U.f64`,
//! `<prefix>_state.u8` and, when recorded, `<prefix>_length.f64`, described by
//! the JSON sidecar `<prefix>_grid.json`. Unset values are stored as `+inf`,
//! unrecorded lengths as NaN.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use olim::{Mesh, PointState, SolutionGrid, Vec2};

use crate::CliError;

const STATES: [PointState; 4] =
    [PointState::Unknown, PointState::Considered, PointState::AcceptedFront, PointState::Accepted];

fn state_code(s: PointState) -> u8 {
    STATES.iter().position(|&t| t == s).unwrap() as u8
}

fn state_by_name(name: &str) -> Option<PointState> {
    STATES.iter().copied().find(|s| s.name() == name)
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

fn fmt_float(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        String::new()
    }
}

pub fn write_grid_csv(grid: &SolutionGrid, path: &Path) -> Result<(), CliError> {
    let mesh = grid.mesh();
    let mut w = csv::Writer::from_path(path).map_err(|e| io_err(path, e))?;
    w.write_record(["i", "j", "x1", "x2", "U", "state", "update_length"]).map_err(|e| io_err(path, e))?;
    let lengths = grid.update_lengths();
    for idx in 0..mesh.len() {
        let (i, j) = mesh.position(idx);
        let x = mesh.coord(idx);
        let l = lengths.map_or(f64::NAN, |l| l[idx]);
        w.write_record([
            i.to_string(),
            j.to_string(),
            fmt_float(x.x),
            fmt_float(x.y),
            fmt_float(grid.values()[idx]),
            grid.state(idx).name().to_string(),
            fmt_float(l),
        ])
        .map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

pub fn read_grid_csv(path: &Path) -> Result<SolutionGrid, CliError> {
    let mut r = csv::Reader::from_path(path).map_err(|e| io_err(path, e))?;
    let bad = |row: usize, what: &str| CliError::Config(format!("{}: row {row}: {what}", path.display()));
    let mut rows = Vec::new();
    for (k, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| io_err(path, e))?;
        if rec.len() != 7 {
            return Err(bad(k + 1, "expected 7 columns"));
        }
        let num = |c: usize| -> Result<f64, CliError> { rec[c].parse().map_err(|_| bad(k + 1, "bad number")) };
        let opt = |c: usize| -> Result<f64, CliError> {
            if rec[c].is_empty() {
                Ok(f64::NAN)
            } else {
                num(c)
            }
        };
        let i: usize = rec[0].parse().map_err(|_| bad(k + 1, "bad index"))?;
        let j: usize = rec[1].parse().map_err(|_| bad(k + 1, "bad index"))?;
        let state = state_by_name(&rec[5]).ok_or_else(|| bad(k + 1, "unknown state"))?;
        rows.push((i, j, Vec2::new(num(2)?, num(3)?), opt(4)?, state, opt(6)?));
    }
    let n1 = rows.iter().map(|r| r.0).max().map_or(0, |m| m + 1);
    let n2 = rows.iter().map(|r| r.1).max().map_or(0, |m| m + 1);
    if n1 < 2 || n2 < 2 || rows.len() != n1 * n2 {
        return Err(CliError::Config(format!("{}: not a complete rectangular grid", path.display())));
    }
    let (lo, hi) = (rows[0].2, rows[rows.len() - 1].2);
    let mesh = Mesh::new((lo.x, hi.x), (lo.y, hi.y), n1, n2).map_err(|e| CliError::Config(e.to_string()))?;
    let mut values = vec![f64::INFINITY; n1 * n2];
    let mut states = vec![PointState::Unknown; n1 * n2];
    let mut lengths = vec![f64::NAN; n1 * n2];
    for (i, j, _, u, s, l) in rows {
        let idx = i * n2 + j;
        values[idx] = if u.is_nan() { f64::INFINITY } else { u };
        states[idx] = s;
        lengths[idx] = l;
    }
    let lengths = lengths.iter().any(|l| !l.is_nan()).then_some(lengths);
    SolutionGrid::from_parts(mesh, values, states, None, lengths).map_err(|e| CliError::Config(e.to_string()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawSidecar {
    pub n1: usize,
    pub n2: usize,
    pub x1_range: (f64, f64),
    pub x2_range: (f64, f64),
    pub layout: String,
    pub values: String,
    pub states: String,
    pub update_lengths: Option<String>,
    pub state_codes: Vec<String>,
}

fn sibling(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn file_name(p: &Path) -> String {
    p.file_name().map(|f| f.to_string_lossy().into_owned()).unwrap_or_default()
}

/// Writes the raw arrays and the sidecar; returns every path written.
pub fn write_grid_raw(grid: &SolutionGrid, prefix: &Path) -> Result<Vec<PathBuf>, CliError> {
    let mesh = grid.mesh();
    let f64s = |v: &[f64]| v.iter().flat_map(|x| x.to_le_bytes()).collect::<Vec<u8>>();
    let u_path = sibling(prefix, "_U.f64");
    let s_path = sibling(prefix, "_state.u8");
    fs::write(&u_path, f64s(grid.values())).map_err(|e| io_err(&u_path, e))?;
    fs::write(&s_path, grid.states().iter().map(|&s| state_code(s)).collect::<Vec<u8>>())
        .map_err(|e| io_err(&s_path, e))?;
    let mut written = vec![u_path.clone(), s_path.clone()];
    let l_path = match grid.update_lengths() {
        Some(l) => {
            let p = sibling(prefix, "_length.f64");
            fs::write(&p, f64s(l)).map_err(|e| io_err(&p, e))?;
            written.push(p.clone());
            Some(p)
        }
        None => None,
    };
    let sidecar = RawSidecar {
        n1: mesh.n1(),
        n2: mesh.n2(),
        x1_range: mesh.x1_range(),
        x2_range: mesh.x2_range(),
        layout: "little-endian, idx = i * n2 + j, i along x1".into(),
        values: file_name(&u_path),
        states: file_name(&s_path),
        update_lengths: l_path.as_deref().map(file_name),
        state_codes: STATES.iter().map(|s| s.name().to_string()).collect(),
    };
    let j_path = sibling(prefix, "_grid.json");
    fs::write(&j_path, serde_json::to_string_pretty(&sidecar).unwrap()).map_err(|e| io_err(&j_path, e))?;
    written.push(j_path);
    Ok(written)
}

pub fn read_grid_raw(sidecar_path: &Path) -> Result<SolutionGrid, CliError> {
    let text = fs::read_to_string(sidecar_path).map_err(|e| io_err(sidecar_path, e))?;
    let meta: RawSidecar =
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", sidecar_path.display())))?;
    let dir = sidecar_path.parent().unwrap_or(Path::new("."));
    let n = meta.n1 * meta.n2;
    let read_f64 = |name: &str| -> Result<Vec<f64>, CliError> {
        let p = dir.join(name);
        let bytes = fs::read(&p).map_err(|e| io_err(&p, e))?;
        if bytes.len() != 8 * n {
            return Err(CliError::Config(format!("{}: expected {} bytes", p.display(), 8 * n)));
        }
        Ok(bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect())
    };
    let values = read_f64(&meta.values)?;
    let s_path = dir.join(&meta.states);
    let codes = fs::read(&s_path).map_err(|e| io_err(&s_path, e))?;
    let states = codes
        .iter()
        .map(|&c| STATES.get(c as usize).copied())
        .collect::<Option<Vec<_>>>()
        .filter(|s| s.len() == n)
        .ok_or_else(|| CliError::Config(format!("{}: bad state codes", s_path.display())))?;
    let lengths = meta.update_lengths.as_deref().map(read_f64).transpose()?;
    let mesh = Mesh::new(meta.x1_range, meta.x2_range, meta.n1, meta.n2).map_err(|e| CliError::Config(e.to_string()))?;
    SolutionGrid::from_parts(mesh, values, states, None, lengths).map_err(|e| CliError::Config(e.to_string()))
}

/// Loads a grid written by `solve`: a `.json` sidecar means raw format,
/// anything else is read as CSV.
pub fn read_grid(path: &Path) -> Result<SolutionGrid, CliError> {
    if path.extension().is_some_and(|e| e == "json") {
        read_grid_raw(path)
    } else {
        read_grid_csv(path)
    }
}

pub fn write_path_csv(points: &[Vec2], path: &Path) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| io_err(path, e))?;
    w.write_record(["k", "x1", "x2"]).map_err(|e| io_err(path, e))?;
    for (k, p) in points.iter().enumerate() {
        w.write_record([k.to_string(), fmt_float(p.x), fmt_float(p.y)]).map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}
