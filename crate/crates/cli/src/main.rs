//! `binsolve` command-line front end: solve, generate, enumerate, bench
//! and diagnostics.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use binsolve::diagnostics::{
    bound_validation, certificate_check, record_steps, reference_saddle_point, rows_to_csv,
    weak_convex_rows, CertReport,
};
use binsolve::driver::{
    bench, solve_with, ClockMode, SolveConfig, SolveError, SolveOutcome, TraceRecord, TuMode,
};
use binsolve::instances::{
    brute_force, generate, instance_to_json, is_maximization, read_instance, write_instance,
    GeneratorConfig, OracleOutcome, ProblemClass,
};
use binsolve::model::{build_saddle_form, preprocess};
use binsolve::pdhg::{default_steps, lagrangian, SolverState};
use binsolve::{BipInstance, Execution};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

const EXIT_FOUND: u8 = 0;
const EXIT_NONE: u8 = 2;
const EXIT_INPUT: u8 = 3;
const EXIT_DIVERGED: u8 = 4;

#[derive(Parser)]
#[command(name = "binsolve", version)]
#[command(about = "Randomized first-order heuristics for binary integer programs")]
struct Cli {
    #[command(subcommand)]
    command: Commands,
}

#[derive(Subcommand)]
enum Commands {
    /// Solve an instance file and print a JSON summary
    Solve {
        file: PathBuf,
        #[command(flatten)]
        opts: SolveOpts,
        /// Write one JSON trace record per line
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Generate a random instance
    Gen {
        #[arg(value_enum)]
        class: ClassArg,
        /// Size parameter (items, elements, nodes or cube side)
        #[arg(long, default_value_t = 10)]
        n: usize,
        /// Number of sets for setcover
        #[arg(long, default_value_t = 10)]
        m: usize,
        /// Facilities for facility location
        #[arg(long = "n-f", default_value_t = 3)]
        n_f: usize,
        /// Customers for facility location
        #[arg(long = "n-c", default_value_t = 3)]
        n_c: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output path (stdout when absent)
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Exhaustive optimum of a small instance
    Oracle {
        file: PathBuf,
        #[arg(long, value_enum, default_value_t = ExecArg::Parallel)]
        exec: ExecArg,
    },
    /// Solve every *.json file in a directory and aggregate by log2(nnz)
    Bench {
        dir: PathBuf,
        #[command(flatten)]
        opts: SolveOpts,
        /// JSON report path
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long)]
        rows_csv: Option<PathBuf>,
        #[arg(long)]
        groups_csv: Option<PathBuf>,
    },
    /// Convex-case residual envelopes on the unpenalized relaxation
    Certify {
        file: PathBuf,
        #[arg(long, default_value_t = 0.25)]
        sigma: f64,
        /// Horizons N to check
        #[arg(long, value_delimiter = ',', default_value = "250,500,1000,2000")]
        horizons: Vec<usize>,
        /// Iterations of the reference run
        #[arg(long, default_value_t = 1_000_000)]
        reference_iters: usize,
        /// Trailing iterates averaged into the reference point
        #[arg(long, default_value_t = 1000)]
        reference_average: usize,
        /// CSV output for the envelope rows
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// CSV output for the raw nonconvex bound rows
        #[arg(long)]
        weak_output: Option<PathBuf>,
    },
    /// Monte-Carlo check of the sampling probability bounds
    Bounds {
        file: PathBuf,
        /// Constant marginal levels forming the schedule
        #[arg(long, value_delimiter = ',', default_value = "0.5,0.7,0.9")]
        levels: Vec<f64>,
        #[arg(long, default_value_t = 4)]
        batch: usize,
        #[arg(long, default_value_t = 10_000)]
        trials: usize,
        #[arg(long, default_value_t = 1.0)]
        delta: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ClassArg {
    Setcover,
    Knapsack,
    MaxcutQp,
    MaxcutIp,
    Assign3d,
    Facility,
    TspMtz,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum TuArg {
    Auto,
    Off,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ClockArg {
    Wall,
    Virtual,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ExecArg {
    Parallel,
    Sequential,
}

impl From<ExecArg> for Execution {
    fn from(e: ExecArg) -> Self {
        match e {
            ExecArg::Parallel => Execution::Parallel,
            ExecArg::Sequential => Execution::Sequential,
        }
    }
}

#[derive(Args, Clone)]
struct SolveOpts {
    #[arg(long, default_value_t = 0.99)]
    sigma: f64,
    /// Iterations between sampling triggers
    #[arg(long = "k-int", default_value_t = 10)]
    k_int: u64,
    /// Sampling rounds per trigger
    #[arg(long = "k-r", default_value_t = 1)]
    k_r: u64,
    /// Samples per round
    #[arg(long, default_value_t = 128)]
    batch: usize,
    #[arg(long = "time-limit", default_value_t = 1800.0)]
    time_limit: f64,
    #[arg(long)]
    max_iter: Option<u64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = TuArg::Auto)]
    tu: TuArg,
    /// bernoulli or assignment3d (defaults to the instance hint)
    #[arg(long)]
    sampler: Option<String>,
    /// Relax sign-uniform equality blocks and repair samples
    #[arg(long)]
    monotone: bool,
    #[arg(long = "rho-min", default_value_t = 1e-3)]
    rho_min: f64,
    #[arg(long = "rho-max", default_value_t = 10.0)]
    rho_max: f64,
    #[arg(long = "growth-T", default_value_t = 100.0)]
    growth_t: f64,
    #[arg(long = "growth-p", default_value_t = 2.0)]
    growth_p: f64,
    #[arg(long = "rho-delta", default_value_t = 1e-6)]
    rho_delta: f64,
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    /// Emit probability bounds in the trace
    #[arg(long)]
    diagnostics: bool,
    /// Timestamps from wall time or from iteration count times --tick
    #[arg(long, value_enum, default_value_t = ClockArg::Wall)]
    clock: ClockArg,
    #[arg(long, default_value_t = 1e-3)]
    tick: f64,
    /// Worker threads (0 uses the rayon default)
    #[arg(long, default_value_t = 0)]
    threads: usize,
    #[arg(long, value_enum, default_value_t = ExecArg::Parallel)]
    exec: ExecArg,
}

impl SolveOpts {
    fn config(&self) -> SolveConfig {
        SolveConfig {
            sigma: self.sigma,
            k_int: self.k_int,
            k_r: self.k_r,
            k_b: self.batch,
            rho_min: self.rho_min,
            rho_max: self.rho_max,
            growth_t: self.growth_t,
            growth_p: self.growth_p,
            rho_delta: self.rho_delta,
            tol: self.tol,
            time_limit_seconds: self.time_limit,
            max_iter: self.max_iter,
            seed: self.seed,
            tu: match self.tu {
                TuArg::Auto => TuMode::Auto,
                TuArg::Off => TuMode::Off,
            },
            sampler: self.sampler.clone(),
            monotone: self.monotone,
            diagnostics: self.diagnostics,
            clock: match self.clock {
                ClockArg::Wall => ClockMode::Wall,
                ClockArg::Virtual => ClockMode::Virtual { tick: self.tick },
            },
            exec: self.exec.into(),
            ..SolveConfig::default()
        }
    }
}

/// Failure carrying the process exit code.
struct Failure {
    code: u8,
    message: String,
}

fn input_error(e: impl std::fmt::Display) -> Failure {
    Failure {
        code: EXIT_INPUT,
        message: e.to_string(),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() {
                EXIT_INPUT
            } else {
                EXIT_FOUND
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn run(cli: Cli) -> Result<u8, Failure> {
    match cli.command {
        Commands::Solve { file, opts, trace } => {
            let threads = opts.threads;
            with_threads(threads, move || cmd_solve(&file, &opts, trace.as_deref()))?
        }
        Commands::Gen {
            class,
            n,
            m,
            n_f,
            n_c,
            seed,
            output,
        } => cmd_gen(class, n, m, n_f, n_c, seed, output.as_deref()),
        Commands::Oracle { file, exec } => cmd_oracle(&file, exec.into()),
        Commands::Bench {
            dir,
            opts,
            output,
            rows_csv,
            groups_csv,
        } => {
            let threads = opts.threads;
            with_threads(threads, move || {
                cmd_bench(
                    &dir,
                    &opts,
                    &output,
                    rows_csv.as_deref(),
                    groups_csv.as_deref(),
                )
            })?
        }
        Commands::Certify {
            file,
            sigma,
            horizons,
            reference_iters,
            reference_average,
            output,
            weak_output,
        } => cmd_certify(
            &file,
            sigma,
            &horizons,
            reference_iters,
            reference_average,
            output.as_deref(),
            weak_output.as_deref(),
        ),
        Commands::Bounds {
            file,
            levels,
            batch,
            trials,
            delta,
            seed,
            output,
        } => cmd_bounds(
            &file,
            &levels,
            batch,
            trials,
            delta,
            seed,
            output.as_deref(),
        ),
    }
}

#[cfg(feature = "parallel")]
fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T, Failure> {
    if threads == 0 {
        return Ok(f());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(input_error)?;
    Ok(pool.install(f))
}

#[cfg(not(feature = "parallel"))]
fn with_threads<T: Send>(_threads: usize, f: impl FnOnce() -> T + Send) -> Result<T, Failure> {
    Ok(f())
}

/// Objective in the instance's own sense.
fn reported(inst: &BipInstance, z: f64) -> f64 {
    if is_maximization(&inst.meta().class) {
        -z
    } else {
        z
    }
}

fn cmd_solve(file: &Path, opts: &SolveOpts, trace: Option<&Path>) -> Result<u8, Failure> {
    let inst = read_instance(file).map_err(input_error)?;
    let cfg = opts.config();
    let mut writer = match trace {
        Some(p) => Some(BufWriter::new(File::create(p).map_err(|e| {
            input_error(format!("cannot create {}: {e}", p.display()))
        })?)),
        None => None,
    };
    let mut write_err: Option<std::io::Error> = None;
    let result = solve_with(&inst, &cfg, |rec: &TraceRecord| {
        if let (Some(w), None) = (writer.as_mut(), write_err.as_ref()) {
            let line = serde_json::to_string(rec).expect("trace record serializes");
            if let Err(e) = writeln!(w, "{line}") {
                write_err = Some(e);
            }
        }
    });
    if let Some(w) = writer.as_mut() {
        if let Err(e) = w.flush() {
            write_err.get_or_insert(e);
        }
    }
    if let Some(e) = write_err {
        return Err(input_error(format!("writing trace: {e}")));
    }
    match result {
        Ok(out) => {
            println!("{}", summary(&inst, &out, "ok"));
            Ok(if out.incumbent.is_some() {
                EXIT_FOUND
            } else {
                EXIT_NONE
            })
        }
        Err(SolveError::Diverged { iter, partial }) => {
            println!("{}", summary(&inst, &partial, "diverged"));
            eprintln!("error: iterates diverged at iteration {iter}");
            Ok(EXIT_DIVERGED)
        }
        Err(e) => Err(input_error(e)),
    }
}

fn summary(inst: &BipInstance, out: &SolveOutcome, status: &str) -> String {
    let inc = &out.incumbent;
    let v = json!({
        "status": status,
        "class": inst.meta().class,
        "objective": inc.is_some().then(|| reported(inst, inc.z_best)),
        "x": inc.x_best.as_ref().map(|x| x.iter().map(|&v| v as u8).collect::<Vec<_>>()),
        "found_at_seconds": inc.is_some().then_some(inc.found_at_seconds),
        "found_at_iter": inc.is_some().then_some(inc.found_at_iter),
        "iterations": out.iterations,
        "sampling_rounds": out.sampling_rounds,
        "stop": out.stop,
        "tu_seconds": out.tu_seconds,
        "working_n": out.working_n,
    });
    v.to_string()
}

fn cmd_gen(
    class: ClassArg,
    n: usize,
    m: usize,
    n_f: usize,
    n_c: usize,
    seed: u64,
    output: Option<&Path>,
) -> Result<u8, Failure> {
    let class = match class {
        ClassArg::Setcover => ProblemClass::Setcover { m, n },
        ClassArg::Knapsack => ProblemClass::Knapsack { n },
        ClassArg::MaxcutQp => ProblemClass::MaxcutQp { n },
        ClassArg::MaxcutIp => ProblemClass::MaxcutIp { n },
        ClassArg::Assign3d => ProblemClass::Assign3d { n },
        ClassArg::Facility => ProblemClass::Facility { n_f, n_c },
        ClassArg::TspMtz => ProblemClass::TspMtz { n },
    };
    let inst = generate(&GeneratorConfig { class, seed }).map_err(input_error)?;
    match output {
        Some(p) => write_instance(&inst, p).map_err(input_error)?,
        None => println!("{}", instance_to_json(&inst)),
    }
    Ok(EXIT_FOUND)
}

fn cmd_oracle(file: &Path, exec: Execution) -> Result<u8, Failure> {
    let inst = read_instance(file).map_err(input_error)?;
    let outcome = brute_force(&inst, exec).map_err(input_error)?;
    match outcome {
        OracleOutcome::Optimal(r) => {
            let v = json!({
                "status": "optimal",
                "z_opt": reported(&inst, r.z_opt),
                "x_opt": r.x_opt.iter().map(|&v| v as u8).collect::<Vec<_>>(),
                "feasible_count": r.feasible_count,
                "enumerated": r.enumerated,
            });
            println!("{v}");
            Ok(EXIT_FOUND)
        }
        OracleOutcome::Infeasible { enumerated } => {
            println!(
                "{}",
                json!({ "status": "infeasible", "enumerated": enumerated })
            );
            Ok(EXIT_NONE)
        }
    }
}

fn write_text(path: &Path, text: &str) -> Result<(), Failure> {
    std::fs::write(path, text)
        .map_err(|e| input_error(format!("cannot write {}: {e}", path.display())))
}

fn cmd_bench(
    dir: &Path,
    opts: &SolveOpts,
    output: &Path,
    rows_csv: Option<&Path>,
    groups_csv: Option<&Path>,
) -> Result<u8, Failure> {
    let mut report = bench(dir, &opts.config())
        .map_err(|e| input_error(format!("cannot read {}: {e}", dir.display())))?;
    for r in &mut report.rows {
        if is_maximization(&r.class) {
            r.z_best = r.z_best.map(|z| -z);
        }
    }
    write_text(output, &report.to_json())?;
    if let Some(p) = rows_csv {
        write_text(p, &report.rows_csv().map_err(input_error)?)?;
    }
    if let Some(p) = groups_csv {
        write_text(p, &report.groups_csv().map_err(input_error)?)?;
    }
    let solved = report.rows.iter().filter(|r| r.solved).count();
    println!(
        "{}",
        json!({ "instances": report.rows.len(), "solved": solved })
    );
    Ok(EXIT_FOUND)
}

fn cmd_certify(
    file: &Path,
    sigma: f64,
    horizons: &[usize],
    reference_iters: usize,
    reference_average: usize,
    output: Option<&Path>,
    weak_output: Option<&Path>,
) -> Result<u8, Failure> {
    let inst = read_instance(file).map_err(input_error)?;
    let sf = preprocess(&build_saddle_form(&inst).map_err(input_error)?);
    let steps = default_steps(sigma).map_err(input_error)?;
    let diverged = |e| Failure {
        code: EXIT_DIVERGED,
        message: format!("{e}"),
    };
    let reference =
        reference_saddle_point(&sf, sigma, reference_iters, reference_average).map_err(diverged)?;
    let start = SolverState::initial(sf.n(), sf.m());
    let (x0, y0) = (start.x.clone(), start.y.clone());
    let phi0 = lagrangian(&sf, &x0, &y0, 0.0);
    let horizon = horizons.iter().copied().max().unwrap_or(0);
    let records = record_steps(&sf, steps, start, horizon).map_err(diverged)?;
    let report: CertReport = certificate_check(
        &records,
        &sf,
        steps,
        0.0,
        &x0,
        &y0,
        Some(&reference),
        horizons,
    )
    .map_err(input_error)?;
    let weak = weak_convex_rows(&records, &sf, steps, phi0, horizons).map_err(input_error)?;
    if let Some(p) = output {
        write_text(p, &report.to_csv().map_err(input_error)?)?;
    }
    if let Some(p) = weak_output {
        write_text(p, &rows_to_csv(&weak).map_err(input_error)?)?;
    }
    let v = json!({
        "delta0": report.delta0,
        "reference_residual": reference.fixed_point_residual,
        "violations": report.violations,
        "per_step_epsilon_violations": report.per_step_epsilon_violations,
    });
    println!("{v}");
    Ok(if report.violations == 0 {
        EXIT_FOUND
    } else {
        EXIT_NONE
    })
}

fn cmd_bounds(
    file: &Path,
    levels: &[f64],
    batch: usize,
    trials: usize,
    delta: f64,
    seed: u64,
    output: Option<&Path>,
) -> Result<u8, Failure> {
    let inst = read_instance(file).map_err(input_error)?;
    let schedule: Vec<Vec<f64>> = levels.iter().map(|&p| vec![p; inst.n()]).collect();
    let report = bound_validation(
        &inst,
        &schedule,
        batch,
        trials,
        delta,
        seed,
        Execution::default(),
    )
    .map_err(input_error)?;
    if let Some(p) = output {
        write_text(p, &report.to_csv().map_err(input_error)?)?;
    }
    println!(
        "{}",
        json!({ "z_opt": report.z_opt.map(|z| reported(&inst, z)), "min_margin": report.min_margin })
    );
    Ok(EXIT_FOUND)
}
