use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use olim::{Method, Vec2};
use olim_cli::bench::{run_bench, BenchSpec, Suite};
use olim_cli::commands::{cmd_map, cmd_solve};
use olim_cli::config::{ConfigMap, RunConfig};
use olim_cli::CliError;

#[derive(Parser)]
#[command(name = "olim", version, about = "Quasi-potential solver for 2D SDEs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve and write the U grid, states and a JSON summary.
    Solve(RunArgs),
    /// Trace a minimum action path to the attractor.
    Map {
        #[command(flatten)]
        run: RunArgs,
        /// Start point "x,y".
        #[arg(long, allow_hyphen_values = true)]
        start: String,
        /// Grid written by an earlier `solve` (CSV or raw `_grid.json`);
        /// solves inline when absent.
        #[arg(long)]
        grid: Option<PathBuf>,
    },
    /// Sweep methods, mesh sizes and K on the built-in problems.
    Bench {
        #[arg(long, default_value = "both")]
        suite: String,
        /// Comma-separated mesh sizes; may be empty.
        #[arg(long, default_value = "128,256,512")]
        ns: String,
        /// "auto" or comma-separated K values.
        #[arg(long = "K", default_value = "auto")]
        k: String,
        /// Comma-separated method names.
        #[arg(long, default_value = "olim-r,olim-mid,olim-tr,olim-sim,oum")]
        methods: String,
        #[arg(long, default_value = "bench")]
        out_prefix: String,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Stop {
    Boundary,
    Exhaust,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Raw,
}

#[derive(Args)]
struct RunArgs {
    /// Flat `key = value` file; flags override its entries.
    #[arg(long)]
    config: Option<PathBuf>,
    /// linear, limit_cycle or custom.
    #[arg(long)]
    problem: Option<String>,
    /// Parameter of the linear problem.
    #[arg(long, allow_hyphen_values = true)]
    a: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    b1: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    b2: Option<String>,
    /// x1min,x1max,x2min,x2max
    #[arg(long, allow_hyphen_values = true)]
    domain: Option<String>,
    #[arg(long)]
    n: Option<String>,
    #[arg(long)]
    method: Option<String>,
    /// Integer or "auto".
    #[arg(long = "K")]
    k: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    init_point: Option<String>,
    #[arg(long)]
    init_curve: Option<PathBuf>,
    #[arg(long, value_enum)]
    stop: Option<Stop>,
    /// linear, limit_cycle, none or auto.
    #[arg(long)]
    exact: Option<String>,
    #[arg(long)]
    out_prefix: Option<String>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    #[arg(long)]
    record_lengths: bool,
}

impl RunArgs {
    fn resolve(&self) -> Result<RunConfig, CliError> {
        let mut map = match &self.config {
            Some(p) => ConfigMap::parse(
                &fs::read_to_string(p).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?,
            )?,
            None => ConfigMap::default(),
        };
        let mut flags = ConfigMap::default();
        let pairs = [
            ("problem", self.problem.clone()),
            ("a", self.a.clone()),
            ("b1", self.b1.clone()),
            ("b2", self.b2.clone()),
            ("domain", self.domain.clone()),
            ("n", self.n.clone()),
            ("method", self.method.clone()),
            ("K", self.k.clone()),
            ("init_point", self.init_point.clone()),
            ("init_curve", self.init_curve.as_ref().map(|p| p.display().to_string())),
            (
                "stop",
                self.stop.map(|s| match s {
                    Stop::Boundary => "boundary".into(),
                    Stop::Exhaust => "exhaust".into(),
                }),
            ),
            ("exact", self.exact.clone()),
            ("out_prefix", self.out_prefix.clone()),
            (
                "format",
                self.format.map(|f| match f {
                    Format::Csv => "csv".into(),
                    Format::Raw => "raw".into(),
                }),
            ),
            ("record_lengths", self.record_lengths.then(|| "true".into())),
        ];
        for (k, v) in pairs {
            if let Some(v) = v {
                flags.set(k, &v)?;
            }
        }
        map.merge(&flags);
        RunConfig::from_map(&map)
    }
}

fn parse_point(s: &str) -> Result<Vec2, CliError> {
    let parts: Vec<f64> = s.split(',').map(|p| p.trim().parse::<f64>()).collect::<Result<_, _>>().map_err(|_| {
        CliError::Usage(format!("start '{s}': expected x,y"))
    })?;
    match parts.as_slice() {
        [x, y] => Ok(Vec2::new(*x, *y)),
        _ => Err(CliError::Usage(format!("start '{s}': expected x,y"))),
    }
}

fn parse_list<T>(s: &str, what: &str, f: impl Fn(&str) -> Option<T>) -> Result<Vec<T>, CliError> {
    s.split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|p| f(p).ok_or_else(|| CliError::Config(format!("{what}: cannot parse '{p}'"))))
        .collect()
}

fn write_file(path: &str, text: &str) -> Result<(), CliError> {
    if let Some(dir) = std::path::Path::new(path).parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    }
    fs::write(path, text).map_err(|e| CliError::Io(format!("{path}: {e}")))
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Solve(args) => {
            let cfg = args.resolve()?;
            let out = cmd_solve(&cfg)?;
            for w in out.summary["warnings"].as_array().into_iter().flatten() {
                eprintln!("warning: {}", w.as_str().unwrap_or_default());
            }
            let s = &out.summary;
            println!(
                "solved {}x{} with {} K={} in {:.3}s",
                cfg.n,
                cfg.n,
                cfg.method.name(),
                s["resolved"]["K"],
                s["solve_seconds"].as_f64().unwrap_or(0.0)
            );
            if let Some(e) = out.summary["errors"].as_object() {
                println!("max error {:.4e}, rms {:.4e}", e["max_abs"].as_f64().unwrap(), e["rms"].as_f64().unwrap());
            }
            for a in &out.artifacts {
                println!("wrote {}", a.display());
            }
        }
        Command::Map { run, start, grid } => {
            let cfg = run.resolve()?;
            let out = cmd_map(&cfg, parse_point(&start)?, grid.as_deref())?;
            println!("{:?} after {} points, action {:.6}", out.path.status, out.path.points.len(), out.action);
            for a in &out.artifacts {
                println!("wrote {}", a.display());
            }
        }
        Command::Bench { suite, ns, k, methods, out_prefix } => {
            let suites =
                Suite::parse_list(&suite).ok_or_else(|| CliError::Config(format!("suite '{suite}': expected linear, limit_cycle or both")))?;
            let spec = BenchSpec {
                suites,
                ns: parse_list(&ns, "ns", |p| p.parse().ok())?,
                ks: if k.trim() == "auto" { vec![] } else { parse_list(&k, "K", |p| p.parse().ok().filter(|&k| k >= 1))? },
                methods: parse_list(&methods, "methods", Method::from_name)?,
            };
            let report = run_bench(&spec, |r| {
                eprintln!(
                    "{} {} N={} K={}: {}",
                    r.suite.name(),
                    r.method,
                    r.n,
                    r.k,
                    match (&r.error, r.max_abs) {
                        (Some(e), _) => format!("failed: {e}"),
                        (None, Some(m)) => format!("max {m:.4e}"),
                        _ => String::new(),
                    }
                )
            });
            print!("{}", report.to_table());
            let csv_path = format!("{out_prefix}_bench.csv");
            let json_path = format!("{out_prefix}_bench.json");
            write_file(&csv_path, &report.to_csv())?;
            write_file(&json_path, &(serde_json::to_string_pretty(&report).unwrap() + "\n"))?;
            println!("wrote {csv_path}\nwrote {json_path}");
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("olim: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
