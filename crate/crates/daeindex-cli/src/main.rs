use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use daeindex::generator::{self, ScfSpec, Sidecar, Variant, DEFAULT_CONDITION_BOUND};
use daeindex::report::{self, TOOL_VERSION};
use daeindex::scanner::{self, GridSpec, CAVEAT};
use daeindex::solver::{self, IvpSpec};
use daeindex::{DaeProblem, TolerancePolicy};

mod selftest;

#[derive(Parser)]
#[command(name = "daeindex", version, about = "Index and characteristic values of linear time-varying DAEs")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Report every framework at one point.
    Analyze {
        problem: PathBuf,
        /// Evaluation point; the interval midpoint by default.
        #[arg(long)]
        t: Option<f64>,
        #[arg(long)]
        kmax: Option<usize>,
        /// Relative rank tolerance.
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Sweep the interval and segment it into constant-profile pieces.
    Scan {
        problem: PathBuf,
        #[arg(long, default_value_t = scanner::DEFAULT_GRID)]
        grid: usize,
        #[arg(long)]
        kmax: Option<usize>,
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        json: Option<PathBuf>,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Write a pair with prescribed characteristic values.
    Generate {
        /// θ₀,…,θ_{μ−1}, comma separated; empty for index zero.
        #[arg(long, value_delimiter = ',', num_args = 0..)]
        theta: Vec<usize>,
        #[arg(long)]
        d: usize,
        #[arg(long, default_value = "column")]
        variant: Variant,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Degree of the random equivalence transform; no transform when absent.
        #[arg(long)]
        degree: Option<usize>,
        #[arg(long)]
        l1: Option<usize>,
        #[arg(long, default_value = "problem.json")]
        problem: PathBuf,
        #[arg(long, default_value = "expected.json")]
        expected: PathBuf,
    },
    /// Integrate an initial value problem through the completion ODE.
    Solve {
        problem: PathBuf,
        ivp: PathBuf,
        #[arg(long, default_value = "sol.csv")]
        out: PathBuf,
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Run the built-in fixture battery and a generator round trip.
    Selftest {
        #[arg(long, default_value_t = 50)]
        round_trips: usize,
    },
}

fn read(path: &Path) -> Result<String, String> {
    fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))
}

fn write(path: &Path, s: &str) -> Result<(), String> {
    fs::write(path, s).map_err(|e| format!("{}: {e}", path.display()))
}

/// `--tol`, then `DAE_TOL`, then the tolerance stored in the file.
fn load(path: &Path, tol: Option<f64>) -> Result<DaeProblem, String> {
    let p = DaeProblem::from_json_str(&read(path)?).map_err(|e| format!("{}: {e}", path.display()))?;
    let mut policy = p.tol;
    if std::env::var_os("DAE_TOL").is_some() {
        policy.rel_rank_tol = TolerancePolicy::from_env().rel_rank_tol;
    }
    if let Some(t) = tol {
        policy = TolerancePolicy::new(t, policy.abs_floor).map_err(|e| e.to_string())?;
    }
    Ok(p.with_tol(policy))
}

fn json<T: serde::Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("report serializes")
}

fn run(cli: Cli) -> Result<u8, String> {
    match cli.cmd {
        Cmd::Analyze { problem, t, kmax, tol } => {
            let p = load(&problem, tol)?;
            let (a, b) = p.interval();
            let r = report::analyze(&p, t.unwrap_or(0.5 * (a + b)), kmax).map_err(|e| e.to_string())?;
            println!("{}", json(&r));
            Ok(r.exit_code() as u8)
        }
        Cmd::Scan {
            problem,
            grid,
            kmax,
            tol,
            json: jpath,
            csv,
        } => {
            let p = load(&problem, tol)?;
            let spec = GridSpec { n: grid, kmax };
            let r = scanner::scan(&p, &spec);
            let j = report::scan_json(&p, &r, grid);
            println!("daeindex {TOOL_VERSION}: {} probes on [{}, {}]", r.grid.len(), j.grid.interval[0], j.grid.interval[1]);
            println!("note: {CAVEAT}");
            for s in &r.segments {
                println!("segment [{}, {}]  {}", s.t0, s.t1, s.profile);
            }
            for pt in &j.points {
                println!("{:<16} in [{}, {}]", pt.kind, pt.t_lo, pt.t_hi);
            }
            println!("almost regular: {}", r.almost_regular);
            if let Some(path) = jpath {
                write(&path, &json(&j))?;
            }
            if let Some(path) = csv {
                write(&path, &report::scan_csv(&r))?;
            }
            Ok(r.exit_code() as u8)
        }
        Cmd::Generate {
            theta,
            d,
            variant,
            seed,
            degree,
            l1,
            problem,
            expected,
        } => {
            let mut spec = ScfSpec::new(d, theta, variant, seed);
            spec.l1 = l1;
            let g = generator::generate(&spec, degree, DEFAULT_CONDITION_BOUND).map_err(|e| e.to_string())?;
            write(&problem, &g.problem.to_json_string())?;
            let side = Sidecar {
                spec: g.spec.clone(),
                seed,
                transform_degree: degree.unwrap_or(0),
                expected_profile: g.expected.clone(),
            };
            write(&expected, &json(&side))?;
            println!("m = {}, expected {}", g.problem.m(), g.expected);
            Ok(0)
        }
        Cmd::Solve { problem, ivp, out, tol } => {
            let p = load(&problem, tol)?;
            let spec: IvpSpec = serde_json::from_str(&read(&ivp)?).map_err(|e| format!("{}: {e}", ivp.display()))?;
            let r = solver::integrate_completion(&p, &spec).map_err(|e| e.to_string())?;
            let m = p.m();
            let mut csv = String::from("t");
            for i in 1..=m {
                csv.push_str(&format!(",x{i}"));
            }
            csv.push_str(",residual,drift\n");
            for i in 0..r.grid.len() {
                csv.push_str(&format!("{}", r.grid[i]));
                for v in r.x[i].iter() {
                    csv.push_str(&format!(",{v}"));
                }
                csv.push_str(&format!(",{},{}\n", r.residual[i], r.drift[i]));
            }
            write(&out, &csv)?;
            println!(
                "{} steps, residual max {:.3e}, drift max {:.3e}, consistency gap {:.3e}",
                r.grid.len() - 1,
                r.residual_max,
                r.constraint_drift_max,
                r.consistency_gap
            );
            Ok(0)
        }
        Cmd::Selftest { round_trips } => Ok(if selftest::run(round_trips) { 0 } else { 1 }),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
