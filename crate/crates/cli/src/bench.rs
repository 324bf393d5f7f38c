//! Benchmark sweeps over (method, N, K) on the built-in problems.

use std::fmt::Write as _;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use olim::{error_metrics, fit_power_law, rule_of_thumb_k, solve, Method, PowerLaw};

use crate::config::{ExactSpec, InitSpec, KSpec, OutputFormat, ProblemSpec, RunConfig};
use crate::problem::Problem;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Linear,
    LimitCycle,
}

impl Suite {
    pub fn name(self) -> &'static str {
        match self {
            Suite::Linear => "linear",
            Suite::LimitCycle => "limit_cycle",
        }
    }

    /// `linear`, `limit_cycle` or `both`.
    pub fn parse_list(s: &str) -> Option<Vec<Suite>> {
        match s {
            "linear" => Some(vec![Suite::Linear]),
            "limit_cycle" => Some(vec![Suite::LimitCycle]),
            "both" => Some(vec![Suite::Linear, Suite::LimitCycle]),
            _ => None,
        }
    }

    /// The single-run configuration that reproduces a cell.
    pub fn config(self, method: Method, n: usize, k: u32) -> RunConfig {
        RunConfig {
            problem: ProblemSpec::Builtin { name: self.name().into(), a: None },
            domain: None,
            n,
            method,
            k: KSpec::Fixed(k),
            init: InitSpec::Auto,
            stop: Default::default(),
            exact: ExactSpec::Auto,
            out_prefix: "olim".into(),
            format: OutputFormat::Csv,
            record_lengths: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchSpec {
    pub suites: Vec<Suite>,
    pub ns: Vec<usize>,
    /// Empty means the rule of thumb for each (method, N).
    pub ks: Vec<u32>,
    pub methods: Vec<Method>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub suite: Suite,
    pub method: String,
    pub n: usize,
    pub k: u32,
    pub max_abs: Option<f64>,
    pub rms: Option<f64>,
    pub solve_seconds: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchFit {
    pub suite: Suite,
    pub method: String,
    /// `None` when K followed the rule of thumb.
    pub k: Option<u32>,
    /// `E = C N^-q`.
    pub max_abs: PowerLaw,
    pub rms: PowerLaw,
    /// `T = C N^q`.
    pub time: PowerLaw,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub rows: Vec<BenchRow>,
    pub fits: Vec<BenchFit>,
}

fn run_cell(suite: Suite, method: Method, n: usize, k: u32) -> BenchRow {
    let mut row = BenchRow {
        suite,
        method: method.name().into(),
        n,
        k,
        max_abs: None,
        rms: None,
        solve_seconds: None,
        error: None,
    };
    let result = Problem::build(&suite.config(method, n, k)).and_then(|p| {
        let t = Instant::now();
        let grid = solve(&p.mesh, &p.field, &p.solver)?;
        let secs = t.elapsed().as_secs_f64();
        let exact = p.exact.expect("built-in suites have exact solutions");
        Ok((error_metrics(&grid, |x| exact.value(x)), secs))
    });
    match result {
        Ok((m, secs)) => {
            row.max_abs = Some(m.max_abs);
            row.rms = Some(m.rms);
            row.solve_seconds = Some(secs);
        }
        Err(e) => row.error = Some(e.to_string()),
    }
    row
}

/// Runs every cell in sequence, so the recorded times can be compared.
/// Failed cells are recorded and the sweep continues.
pub fn run_bench(spec: &BenchSpec, mut progress: impl FnMut(&BenchRow)) -> BenchmarkReport {
    let mut report = BenchmarkReport::default();
    for &suite in &spec.suites {
        for &method in &spec.methods {
            for &n in &spec.ns {
                let ks = if spec.ks.is_empty() { vec![rule_of_thumb_k(method, n)] } else { spec.ks.clone() };
                for k in ks {
                    let row = run_cell(suite, method, n, k);
                    progress(&row);
                    report.rows.push(row);
                }
            }
        }
    }
    report.fits = fits(spec, &report.rows);
    report
}

fn fits(spec: &BenchSpec, rows: &[BenchRow]) -> Vec<BenchFit> {
    let groups: Vec<Option<u32>> = if spec.ks.is_empty() { vec![None] } else { spec.ks.iter().map(|&k| Some(k)).collect() };
    let mut out = Vec::new();
    for &suite in &spec.suites {
        for &method in &spec.methods {
            for &k in &groups {
                let cells: Vec<&BenchRow> = rows
                    .iter()
                    .filter(|r| r.suite == suite && r.method == method.name() && k.is_none_or(|k| r.k == k))
                    .filter(|r| r.error.is_none())
                    .collect();
                let ns: Vec<f64> = cells.iter().map(|r| r.n as f64).collect();
                let pick = |f: fn(&BenchRow) -> Option<f64>| cells.iter().map(|r| f(r).unwrap()).collect::<Vec<f64>>();
                let (Ok(max_abs), Ok(rms), Ok(time)) = (
                    fit_power_law(&ns, &pick(|r| r.max_abs)),
                    fit_power_law(&ns, &pick(|r| r.rms)),
                    fit_power_law(&ns, &pick(|r| r.solve_seconds)),
                ) else {
                    continue;
                };
                let time = PowerLaw { c: time.c, q: -time.q };
                out.push(BenchFit { suite, method: method.name().into(), k, max_abs, rms, time });
            }
        }
    }
    out
}

impl BenchmarkReport {
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["suite", "method", "N", "K", "max_abs", "rms", "solve_seconds", "error"]).unwrap();
        let f = |v: Option<f64>| v.map_or(String::new(), |v| format!("{v:.16e}"));
        for r in &self.rows {
            w.write_record([
                r.suite.name().to_string(),
                r.method.clone(),
                r.n.to_string(),
                r.k.to_string(),
                f(r.max_abs),
                f(r.rms),
                f(r.solve_seconds),
                r.error.clone().unwrap_or_default(),
            ])
            .unwrap();
        }
        String::from_utf8(w.into_inner().unwrap()).unwrap()
    }

    /// Plain-text table, one block per suite and method.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let mut last = None;
        for r in &self.rows {
            let key = (r.suite, r.method.clone());
            if last.as_ref() != Some(&key) {
                let _ = writeln!(out, "\n{} / {}", r.suite.name(), r.method);
                let _ = writeln!(out, "{:>6} {:>4} {:>12} {:>12} {:>10}", "N", "K", "max error", "RMS error", "time, s");
                last = Some(key);
            }
            match (&r.error, r.max_abs, r.rms, r.solve_seconds) {
                (None, Some(m), Some(e), Some(t)) => {
                    let _ = writeln!(out, "{:>6} {:>4} {:>12.4e} {:>12.4e} {:>10.3}", r.n, r.k, m, e, t);
                }
                (err, ..) => {
                    let _ = writeln!(out, "{:>6} {:>4} failed: {}", r.n, r.k, err.as_deref().unwrap_or("?"));
                }
            }
        }
        if !self.fits.is_empty() {
            let _ = writeln!(out, "\nleast-squares fits");
            for f in &self.fits {
                let k = f.k.map_or("auto".to_string(), |k| k.to_string());
                let _ = writeln!(
                    out,
                    "{} / {} K={k}: max {:.3}*N^-{:.3}, rms {:.3}*N^-{:.3}, time {:.3e}*N^{:.3}",
                    f.suite.name(),
                    f.method,
                    f.max_abs.c,
                    f.max_abs.q,
                    f.rms.c,
                    f.rms.q,
                    f.time.c,
                    f.time.q
                );
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use olim::QuadRule;

    #[test]
    fn empty_n_list_gives_empty_report() {
        let spec = BenchSpec { suites: vec![Suite::Linear], ns: vec![], ks: vec![], methods: Method::ALL.to_vec() };
        let report = run_bench(&spec, |_| {});
        assert_eq!(report, BenchmarkReport::default());
        assert_eq!(report.to_csv().lines().count(), 1);
    }

    #[test]
    fn sweep_with_fits() {
        let spec = BenchSpec {
            suites: vec![Suite::Linear],
            ns: vec![17, 33, 65],
            ks: vec![2, 4],
            methods: vec![Method::Olim(QuadRule::RightHand)],
        };
        let mut seen = 0;
        let report = run_bench(&spec, |_| seen += 1);
        assert_eq!(seen, 6);
        assert!(report.rows.iter().all(|r| r.error.is_none()));
        assert_eq!(report.fits.len(), 2);
        assert!(report.fits.iter().all(|f| f.max_abs.q > 0.0));
        let table = report.to_table();
        assert!(table.contains("linear / olim-r") && table.contains("least-squares fits"));
    }

    #[test]
    fn failed_cells_are_recorded() {
        let spec = BenchSpec {
            suites: vec![Suite::Linear],
            ns: vec![1, 9],
            ks: vec![],
            methods: vec![Method::Olim(QuadRule::Midpoint)],
        };
        let report = run_bench(&spec, |_| {});
        assert_eq!(report.rows.len(), 2);
        assert!(report.rows[0].error.is_some());
        assert!(report.rows[1].error.is_none());
        assert!(report.fits.is_empty());
        assert!(report.to_table().contains("failed"));
    }

    #[test]
    fn suite_names() {
        assert_eq!(Suite::parse_list("both").unwrap().len(), 2);
        assert!(Suite::parse_list("all").is_none());
    }
}
