//! Command-line front end. Each subcommand writes its report to the given
//! writers and returns the process exit code.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::di::{solve_di, tradeoff_curve};
use crate::error::Error;
use crate::lqr::{min_cost, solve_dare, LqrCertainty, PlantModel};
use crate::model_file::{format_section, read_model};
use crate::sim::{
    fmt_num, simulate_traced, simulate_with, write_summary_csv, write_trace_csv, LoopDesign,
    SimOptions, SimulationSummary,
};
use crate::validation::GapReport;

pub const EXIT_OK: i32 = 0;
pub const EXIT_PARSE: i32 = 2;
pub const EXIT_RICCATI: i32 = 3;
pub const EXIT_SDP: i32 = 4;
pub const EXIT_SIMULATION: i32 = 5;
pub const EXIT_BOUND: i32 = 6;

/// Relative slack allowed on the empirical cost.
pub const COST_TOLERANCE: f64 = 0.05;
/// Relative Frobenius tolerance on the empirical state covariance.
pub const COVARIANCE_TOLERANCE: f64 = 0.03;

#[derive(Debug, Parser)]
#[command(
    name = "lqg-rate",
    version,
    about = "Rate–cost bounds and quantized-feedback synthesis for LQG control"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Riccati solution S, gain K and weight Θ.
    Lqr {
        model: PathBuf,
    },
    /// Minimum directed information DI(γ) and the rate upper bound.
    Di {
        model: PathBuf,
        #[arg(long)]
        gamma: f64,
    },
    /// DI(γ) and the rate upper bound over a grid of budgets, as CSV.
    Tradeoff {
        model: PathBuf,
        #[arg(long)]
        gamma_min: f64,
        #[arg(long)]
        gamma_max: f64,
        #[arg(long, default_value_t = 20)]
        points: usize,
        /// Evenly spaced grid instead of logarithmic.
        #[arg(long)]
        linear: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sensor, quantizer steps and gains for budget γ.
    Synthesize {
        model: PathBuf,
        #[arg(long)]
        gamma: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Closed-loop Monte Carlo of the synthesized controller.
    Simulate {
        #[command(flatten)]
        run: RunArgs,
        /// Per-step trace of trial 0 as CSV.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Simulate and check the cost and rate bounds.
    Verify {
        #[command(flatten)]
        run: RunArgs,
    },
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    pub model: PathBuf,
    #[arg(long)]
    pub gamma: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 200_000)]
    pub steps: usize,
    #[arg(long, default_value_t = 4)]
    pub trials: usize,
    /// Summary CSV.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, hide = true, default_value_t = 1.0)]
    pub delta_scale: f64,
}

/// A failed stage: the exit code and the diagnostic.
#[derive(Debug)]
struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn new(code: i32, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }

    fn io(e: std::io::Error) -> Self {
        Self::new(EXIT_PARSE, format!("i/o error: {e}"))
    }
}

type Outcome = std::result::Result<i32, Failure>;

/// Runs a parsed command line.
pub fn run<O: Write, E: Write>(cli: Cli, out: &mut O, err: &mut E) -> i32 {
    let result = match cli.command {
        Command::Lqr { model } => cmd_lqr(&model, out),
        Command::Di { model, gamma } => cmd_di(&model, gamma, out),
        Command::Tradeoff {
            model,
            gamma_min,
            gamma_max,
            points,
            linear,
            out: path,
        } => cmd_tradeoff(&model, gamma_min, gamma_max, points, linear, path.as_deref(), out, err),
        Command::Synthesize {
            model,
            gamma,
            out: path,
        } => cmd_synthesize(&model, gamma, path.as_deref(), out),
        Command::Simulate { run, trace } => cmd_simulate(&run, trace.as_deref(), out),
        Command::Verify { run } => cmd_verify(&run, out),
    };
    match result {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}

fn load_model(path: &Path) -> std::result::Result<PlantModel, Failure> {
    let matrices = read_model(path).map_err(|e| Failure::new(EXIT_PARSE, e.to_string()))?;
    matrices.into_model().map_err(|e| match e {
        Error::NotStabilizable { .. } | Error::NotDetectable { .. } => {
            Failure::new(EXIT_RICCATI, e.to_string())
        }
        other => Failure::new(EXIT_PARSE, other.to_string()),
    })
}

fn riccati(model: &PlantModel) -> std::result::Result<LqrCertainty, Failure> {
    solve_dare(model).map_err(|e| Failure::new(EXIT_RICCATI, e.to_string()))
}

fn write_line<O: Write>(out: &mut O, label: &str, value: f64) -> std::result::Result<(), Failure> {
    writeln!(out, "{label}: {}", fmt_num(value)).map_err(Failure::io)
}

fn write_matrix<O: Write>(
    out: &mut O,
    name: &str,
    m: &nalgebra::DMatrix<f64>,
) -> std::result::Result<(), Failure> {
    out.write_all(format_section(name, m).as_bytes())
        .map_err(Failure::io)
}

fn cmd_lqr<O: Write>(path: &Path, out: &mut O) -> Outcome {
    let model = load_model(path)?;
    let cert = riccati(&model)?;
    write_matrix(out, "S", cert.s.as_matrix())?;
    write_matrix(out, "K", &cert.k)?;
    write_matrix(out, "Theta", cert.theta.as_matrix())?;
    write_line(out, "min_cost", min_cost(&model, &cert))?;
    Ok(EXIT_OK)
}

fn cmd_di<O: Write>(path: &Path, gamma: f64, out: &mut O) -> Outcome {
    let model = load_model(path)?;
    let cert = riccati(&model)?;
    let sol = solve_di(&model, &cert, gamma).map_err(|e| Failure::new(EXIT_SDP, e.to_string()))?;
    write_line(out, "gamma", gamma)?;
    write_line(out, "min_cost", min_cost(&model, &cert))?;
    write_line(out, "di_bits", sol.di_bits)?;
    write_line(out, "upper_bits", sol.upper_bits())?;
    writeln!(out, "rank_r: {}", sol.rank_r).map_err(Failure::io)?;
    writeln!(out, "budget_active: {}", sol.budget_active()).map_err(Failure::io)?;
    write_line(out, "kkt_residual", sol.kkt_residual)?;
    write_matrix(out, "P", sol.p_opt.as_matrix())?;
    write_matrix(out, "Pi", sol.pi_opt.as_matrix())?;
    write_matrix(out, "SNR", sol.snr.as_matrix())?;
    Ok(EXIT_OK)
}

/// `points` budgets from `lo` to `hi`, log-spaced unless `linear`.
pub fn gamma_grid(lo: f64, hi: f64, points: usize, linear: bool) -> Vec<f64> {
    if points == 1 {
        return vec![lo];
    }
    let last = (points - 1) as f64;
    (0..points)
        .map(|i| {
            let s = i as f64 / last;
            if i + 1 == points {
                hi
            } else if linear {
                lo + s * (hi - lo)
            } else {
                (lo.ln() + s * (hi.ln() - lo.ln())).exp()
            }
        })
        .collect()
}

pub const TRADEOFF_HEADER: &str = "gamma,di_bits,upper_bits,rank_r";

#[allow(clippy::too_many_arguments)]
fn cmd_tradeoff<O: Write, E: Write>(
    path: &Path,
    gamma_min: f64,
    gamma_max: f64,
    points: usize,
    linear: bool,
    csv: Option<&Path>,
    out: &mut O,
    err: &mut E,
) -> Outcome {
    if points < 2 {
        return Err(Failure::new(EXIT_PARSE, "--points must be at least 2"));
    }
    if !(gamma_max > gamma_min) {
        return Err(Failure::new(EXIT_PARSE, "--gamma-max must exceed --gamma-min"));
    }
    let model = load_model(path)?;
    let cert = riccati(&model)?;
    let floor = min_cost(&model, &cert);
    if !(gamma_min > floor) {
        return Err(Failure::new(
            EXIT_SDP,
            format!(
                "budget {} does not exceed the minimum cost Tr(WS) = {}",
                fmt_num(gamma_min),
                fmt_num(floor)
            ),
        ));
    }
    let grid = gamma_grid(gamma_min, gamma_max, points, linear);
    let rows = tradeoff_curve(&model, &cert, &grid);
    let mut text = format!("{TRADEOFF_HEADER}\n");
    let mut ok = 0;
    for (gamma, row) in &rows {
        match row {
            Ok(p) => {
                ok += 1;
                text.push_str(&format!(
                    "{},{},{},{}\n",
                    fmt_num(*gamma),
                    fmt_num(p.di_bits),
                    fmt_num(p.upper_bits),
                    p.rank_r
                ));
            }
            Err(e) => {
                let _ = writeln!(err, "warning: gamma {} failed: {e}", fmt_num(*gamma));
                text.push_str(&format!("{},nan,nan,nan\n", fmt_num(*gamma)));
            }
        }
    }
    match csv {
        Some(p) => std::fs::write(p, &text).map_err(Failure::io)?,
        None => out.write_all(text.as_bytes()).map_err(Failure::io)?,
    }
    if ok == 0 {
        return Err(Failure::new(EXIT_SDP, "every grid point failed"));
    }
    Ok(EXIT_OK)
}

fn synthesize(
    path: &Path,
    gamma: f64,
    seed: u64,
) -> std::result::Result<LoopDesign, Failure> {
    let model = load_model(path)?;
    let cert = riccati(&model)?;
    let sol = solve_di(&model, &cert, gamma).map_err(|e| Failure::new(EXIT_SDP, e.to_string()))?;
    LoopDesign::from_parts(model, cert, sol, seed)
        .map_err(|e| Failure::new(EXIT_SIMULATION, e.to_string()))
}

/// Design file: sensor `C`, noise variances `V`, steps `Delta`, Kalman gain
/// `L` and control gain `K`, in the model-file section format.
pub fn format_design(design: &LoopDesign) -> String {
    let n = design.model.state_dim();
    let r = design.rank();
    let mut text = format!(
        "# gamma {}\n# di_bits {}\n# upper_bits {}\n# rank_r {r}\n",
        fmt_num(design.sol.gamma),
        fmt_num(design.sol.di_bits),
        fmt_num(design.sol.upper_bits()),
    );
    if r > 0 {
        let row = |v: &[f64]| nalgebra::DMatrix::from_row_slice(1, v.len(), v);
        text.push_str(&format_section("C", &design.sensor.c));
        text.push_str(&format_section("V", &row(&design.sensor.v)));
        text.push_str(&format_section("Delta", &row(&design.sensor.delta)));
        text.push_str(&format_section("L", &design.sensor.kalman.l));
    }
    debug_assert_eq!(design.cert.k.ncols(), n);
    text.push_str(&format_section("K", &design.cert.k));
    text
}

fn cmd_synthesize<O: Write>(path: &Path, gamma: f64, dest: Option<&Path>, out: &mut O) -> Outcome {
    let design = synthesize(path, gamma, 0)?;
    let text = format_design(&design);
    match dest {
        Some(p) => std::fs::write(p, text).map_err(Failure::io)?,
        None => out.write_all(text.as_bytes()).map_err(Failure::io)?,
    }
    Ok(EXIT_OK)
}

fn run_simulation(
    args: &RunArgs,
    traced: bool,
) -> std::result::Result<(LoopDesign, SimulationSummary, Vec<crate::sim::TraceRow>), Failure> {
    let mut design = synthesize(&args.model, args.gamma, args.seed)?;
    if args.delta_scale != 1.0 {
        for d in &mut design.sensor.delta {
            *d *= args.delta_scale;
        }
    }
    let opts = SimOptions::default();
    let (summary, trace) = if traced {
        simulate_traced(&design, args.steps, args.trials, &opts)
    } else {
        simulate_with(&design, args.steps, args.trials, &opts)
    }
    .map_err(|e| Failure::new(EXIT_SIMULATION, e.to_string()))?;
    Ok((design, summary, trace))
}

fn write_summary<O: Write>(s: &SimulationSummary, out: &mut O) -> std::result::Result<(), Failure> {
    write_line(out, "gamma", s.gamma)?;
    writeln!(out, "steps: {}", s.steps).map_err(Failure::io)?;
    writeln!(out, "trials: {}", s.trials).map_err(Failure::io)?;
    writeln!(out, "rank_r: {}", s.rank_r).map_err(Failure::io)?;
    write_line(out, "di_bits", s.di_bits)?;
    write_line(out, "avg_rate_bits", s.avg_rate_bits)?;
    write_line(out, "rate_ci_halfwidth", s.rate_ci_halfwidth)?;
    write_line(out, "upper_bits", s.upper_bits)?;
    write_line(out, "avg_info_bits", s.avg_info_bits)?;
    write_line(out, "avg_cost", s.avg_cost)?;
    write_line(out, "cost_ci_halfwidth", s.cost_ci_halfwidth)?;
    write_line(out, "analytic_cost", s.analytic.cost)?;
    write_line(out, "stationary_cov_error", s.stationary_cov_error)?;
    Ok(())
}

fn write_csv_file(
    path: &Path,
    f: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
) -> std::result::Result<(), Failure> {
    let mut w = BufWriter::new(File::create(path).map_err(Failure::io)?);
    f(&mut w).and_then(|_| w.flush()).map_err(Failure::io)
}

fn cmd_simulate<O: Write>(args: &RunArgs, trace: Option<&Path>, out: &mut O) -> Outcome {
    let (_, summary, rows) = run_simulation(args, trace.is_some())?;
    write_summary(&summary, out)?;
    if let Some(p) = &args.out {
        write_csv_file(p, |w| write_summary_csv(&summary, w))?;
    }
    if let Some(p) = trace {
        write_csv_file(p, |w| write_trace_csv(&rows, w))?;
    }
    Ok(EXIT_OK)
}

/// Outcome of one verification check.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub detail: String,
    pub pass: bool,
}

/// The four end-to-end checks on a simulation summary.
pub fn verify_checks(s: &SimulationSummary) -> Vec<Check> {
    let cost_limit = s.gamma * (1.0 + COST_TOLERANCE);
    let lower = s.di_bits - s.rate_ci_halfwidth;
    let upper = s.upper_bits + s.rate_ci_halfwidth;
    vec![
        Check {
            name: "cost",
            detail: format!(
                "avg_cost {} <= gamma*(1+{}) = {}",
                fmt_num(s.avg_cost),
                fmt_num(COST_TOLERANCE),
                fmt_num(cost_limit)
            ),
            pass: s.avg_cost <= cost_limit,
        },
        Check {
            name: "rate_lower",
            detail: format!(
                "avg_rate_bits {} >= di_bits - ci = {}",
                fmt_num(s.avg_rate_bits),
                fmt_num(lower)
            ),
            pass: s.avg_rate_bits >= lower,
        },
        Check {
            name: "rate_upper",
            detail: format!(
                "avg_rate_bits {} < upper_bits + ci = {}",
                fmt_num(s.avg_rate_bits),
                fmt_num(upper)
            ),
            pass: s.avg_rate_bits < upper,
        },
        Check {
            name: "covariance",
            detail: format!(
                "stationary_cov_error {} <= {}",
                fmt_num(s.stationary_cov_error),
                fmt_num(COVARIANCE_TOLERANCE)
            ),
            pass: s.stationary_cov_error <= COVARIANCE_TOLERANCE,
        },
    ]
}

fn cmd_verify<O: Write>(args: &RunArgs, out: &mut O) -> Outcome {
    let (design, summary, _) = run_simulation(args, false)?;
    write_summary(&summary, out)?;
    let gap = if design.rank() > 0 {
        Some(
            GapReport::new(
                &design.sensor.innovation_cov(),
                &design.sensor.delta,
                summary.avg_info_bits,
            )
            .map_err(|e| Failure::new(EXIT_SIMULATION, e.to_string()))?,
        )
    } else {
        None
    };
    if let Some(g) = &gap {
        write_line(out, "gap.D", g.d)?;
        write_line(out, "gap.rdf_bits", g.rdf_bits)?;
        write_line(out, "gap.entropy_bits", g.entropy_bits)?;
        write_line(out, "gap.cap_bound_bits", g.cap_bound_bits)?;
        write_line(out, "gap.slack", g.slack)?;
    }
    let checks = verify_checks(&summary);
    for c in &checks {
        writeln!(
            out,
            "{} {}: {}",
            if c.pass { "PASS" } else { "FAIL" },
            c.name,
            c.detail
        )
        .map_err(Failure::io)?;
    }
    if let Some(p) = &args.out {
        write_csv_file(p, |w| {
            write_summary_csv(&summary, w)?;
            if let Some(g) = &gap {
                writeln!(w, "D,rdf_bits,entropy_bits,cap_bound_bits,slack")?;
                writeln!(
                    w,
                    "{},{},{},{},{}",
                    fmt_num(g.d),
                    fmt_num(g.rdf_bits),
                    fmt_num(g.entropy_bits),
                    fmt_num(g.cap_bound_bits),
                    fmt_num(g.slack)
                )?;
            }
            writeln!(w, "check,pass")?;
            for c in &checks {
                writeln!(w, "{},{}", c.name, c.pass)?;
            }
            Ok(())
        })?;
    }
    let all = checks.iter().all(|c| c.pass);
    writeln!(out, "verdict: {}", if all { "PASS" } else { "FAIL" }).map_err(Failure::io)?;
    Ok(if all { EXIT_OK } else { EXIT_BOUND })
}
