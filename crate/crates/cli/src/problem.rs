//! Turns a [`RunConfig`] into a mesh, field and solver configuration.

use std::path::Path;

use olim::solver::circle_polyline;
use olim::{rule_of_thumb_k, ExactSolution, Init, Mesh, SolverConfig, Vec2, VectorField};

use crate::config::{ExactSpec, InitSpec, ProblemSpec, RunConfig};
use crate::CliError;

/// Vertices of the built-in limit-cycle polyline.
pub const CIRCLE_VERTICES: usize = 720;

pub struct Problem {
    pub mesh: Mesh,
    pub field: VectorField,
    pub solver: SolverConfig,
    pub exact: Option<ExactSolution>,
    pub domain: [f64; 4],
    pub warnings: Vec<String>,
}

fn default_domain(problem: &ProblemSpec) -> [f64; 4] {
    match problem {
        ProblemSpec::Builtin { name, .. } if name == "limit_cycle" => [-2.0, 2.0, -2.0, 2.0],
        _ => [-1.0, 1.0, -1.0, 1.0],
    }
}

/// Reads an ordered closed curve from a two-column CSV. A non-numeric first
/// row is taken as a header.
pub fn read_polyline(path: &Path) -> Result<Vec<Vec2>, CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let mut pts = Vec::new();
    for (row, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let nums: Vec<Option<f64>> = rec.iter().map(|f| f.parse::<f64>().ok()).collect();
        match nums.as_slice() {
            [Some(x), Some(y)] if x.is_finite() && y.is_finite() => pts.push(Vec2::new(*x, *y)),
            _ if row == 0 => continue,
            _ => {
                return Err(CliError::Config(format!(
                    "{}: row {} is not two finite numbers",
                    path.display(),
                    row + 1
                )))
            }
        }
    }
    // A repeated closing vertex would give a zero-length segment.
    if pts.len() > 1 && pts.first() == pts.last() {
        pts.pop();
    }
    Ok(pts)
}

impl Problem {
    pub fn build(cfg: &RunConfig) -> Result<Self, CliError> {
        let field = match &cfg.problem {
            ProblemSpec::Builtin { name, a } => VectorField::builtin(name, *a),
            ProblemSpec::Custom { b1, b2 } => VectorField::parse(b1, b2),
        }
        .map_err(|e| CliError::Config(format!("field: {e}")))?;
        let domain = cfg.domain.unwrap_or_else(|| default_domain(&cfg.problem));
        let mesh = Mesh::new((domain[0], domain[1]), (domain[2], domain[3]), cfg.n, cfg.n)
            .map_err(|e| CliError::Config(format!("mesh: {e}")))?;

        let is_cycle = matches!(&cfg.problem, ProblemSpec::Builtin { name, .. } if name == "limit_cycle");
        let init = match &cfg.init {
            InitSpec::Auto if is_cycle => Init::LimitCycle(circle_polyline(Vec2::ZERO, 1.0, CIRCLE_VERTICES)),
            InitSpec::Auto => Init::EquilibriumPoint(Vec2::ZERO),
            InitSpec::Point(p) => Init::EquilibriumPoint(*p),
            InitSpec::Curve(path) => Init::LimitCycle(read_polyline(path)?),
        };

        let mut warnings = Vec::new();
        let k = match cfg.k {
            crate::config::KSpec::Fixed(k) => k,
            crate::config::KSpec::Auto => {
                if !(128..=4096).contains(&cfg.n) {
                    warnings.push(format!(
                        "K=auto: the rule of thumb is tuned for 128 <= n <= 4096, got n = {}",
                        cfg.n
                    ));
                }
                rule_of_thumb_k(cfg.method, cfg.n)
            }
        };
        let solver = SolverConfig::new(cfg.method, k, init)
            .with_stop_policy(cfg.stop)
            .with_update_lengths(cfg.record_lengths);
        solver.validate().map_err(|e| CliError::Config(e.to_string()))?;

        let exact = match cfg.exact {
            ExactSpec::None => None,
            ExactSpec::Known(e) => Some(e),
            ExactSpec::Auto => match &cfg.problem {
                ProblemSpec::Builtin { name, .. } => ExactSolution::by_name(name),
                ProblemSpec::Custom { .. } => None,
            },
        };
        Ok(Problem { mesh, field, solver, exact, domain, warnings })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn auto_k_and_defaults() {
        let cfg = RunConfig::parse("problem = linear\nn = 128\nmethod = olim-mid").unwrap();
        let p = Problem::build(&cfg).unwrap();
        assert_eq!(p.solver.k, 10);
        assert!(p.warnings.is_empty());
        assert_eq!(p.domain, [-1.0, 1.0, -1.0, 1.0]);
        assert_eq!(p.exact, Some(ExactSolution::Linear));

        let cfg = RunConfig::parse("problem = limit_cycle\nn = 64\nmethod = olim-r").unwrap();
        let p = Problem::build(&cfg).unwrap();
        assert_eq!(p.solver.k, 3);
        assert_eq!(p.warnings.len(), 1);
        assert!(matches!(&p.solver.init, Init::LimitCycle(c) if c.len() == CIRCLE_VERTICES));
    }

    #[test]
    fn syntax_error_reports_offset() {
        let cfg = RunConfig::parse("b1 = -x1 +* x2\nb2 = -x2\nn = 8").unwrap();
        match Problem::build(&cfg) {
            Err(CliError::Config(msg)) => assert!(msg.contains("offset"), "{msg}"),
            other => panic!("{:?}", other.map(|_| ())),
        }
    }

    #[test]
    fn polyline_csv() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "x1,x2\n1,0\n0,1\n-1,0\n0,-1\n1,0").unwrap();
        let pts = read_polyline(f.path()).unwrap();
        assert_eq!(pts.len(), 4);
        assert_eq!(pts[1], Vec2::new(0.0, 1.0));

        let mut g = tempfile::NamedTempFile::new().unwrap();
        writeln!(g, "1,0\n0,oops").unwrap();
        assert!(read_polyline(g.path()).is_err());
    }
}
