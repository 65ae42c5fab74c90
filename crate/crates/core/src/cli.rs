//! The `covsel` command line: `gen`, `solve`, `bench`, `check`.
//!
//! Exit codes: 0 success / converged, 1 self-check failure, 2 bad input,
//! 3 solver stopped at its iteration budget.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use crate::error::{CovselError, Result};
use crate::instgen::{generate_detailed, GenParams};
use crate::io::{read_instance, write_instance, write_matrix, TraceFile};
use crate::nsa::solve_nsa_traced;
use crate::problem::{compute_bounds, Instance, SpectralBox};
use crate::report::{NoTrace, SolveReport, Status, TraceSink};
use crate::selfcheck::{run_all, CheckConfig};
use crate::smacs::{solve_smacs_traced, SolverConfig, Termination};
use crate::vsmacs::{solve_vsmacs_traced, AdaptiveConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_BAD_INPUT: i32 = 2;
pub const EXIT_MAX_ITER: i32 = 3;

const DEFAULT_NSA_MAX_ITER: usize = 500_000;

#[derive(Parser, Debug)]
#[command(
    name = "covsel",
    version,
    about = "Sparse inverse-covariance estimation by first-order methods"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a random instance file
    Gen(GenArgs),
    /// Solve an instance file
    Solve(SolveArgs),
    /// Run a benchmark matrix over generated instances
    Bench(BenchArgs),
    /// Run the built-in property suites
    Check(CheckArgs),
}

#[derive(Args, Debug)]
struct GenArgs {
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0.01)]
    density: f64,
    #[arg(long, default_value_t = 0.15)]
    tau: f64,
    #[arg(long, default_value_t = 1.0e-4)]
    theta: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Penalty weight stored in the instance file
    #[arg(long, default_value_t = 0.5)]
    rho: f64,
    /// Output path (stdout when omitted)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Method {
    /// Accelerated dual descent
    Sm,
    /// Accelerated dual descent with adaptive box top
    Vsm,
    /// Primal smoothing baseline
    Nsa,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Sm => "sm",
            Method::Vsm => "vsm",
            Method::Nsa => "nsa",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum TerminationArg {
    Canonical,
    Cheap,
}

#[derive(Args, Debug)]
struct SolveArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long, value_enum, default_value_t = Method::Vsm)]
    method: Method,
    #[arg(long, default_value_t = 0.1)]
    eps: f64,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    /// Use the a priori eigenvalue bounds of the instance as the box
    #[arg(long, conflicts_with_all = ["alpha", "beta"])]
    auto_bounds: bool,
    #[arg(long)]
    max_iter: Option<usize>,
    /// Write a JSON trace here
    #[arg(long)]
    trace: Option<PathBuf>,
    #[arg(long, default_value_t = 1.05)]
    vs1: f64,
    #[arg(long, default_value_t = 1.05)]
    vs2: f64,
    #[arg(long, default_value_t = 0.95)]
    vs3: f64,
    /// Termination rule for `--method sm`
    #[arg(long, value_enum, default_value_t = TerminationArg::Canonical)]
    termination: TerminationArg,
    /// Override the penalty weight stored in the file
    #[arg(long)]
    rho: Option<f64>,
    /// Seed recorded in the trace (informational)
    #[arg(long)]
    seed: Option<u64>,
    /// Write the solution pair to PREFIX.x.mat and PREFIX.u.mat
    #[arg(long, value_name = "PREFIX")]
    dump_solution: Option<String>,
}

#[derive(Args, Debug)]
struct BenchArgs {
    #[arg(long, value_delimiter = ',', required = true)]
    n_list: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "1")]
    seeds: Vec<u64>,
    #[arg(long, value_delimiter = ',', default_value = "sm,vsm")]
    methods: Vec<String>,
    #[arg(long, default_value_t = 0.1)]
    eps: f64,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long, default_value_t = 0.5)]
    rho: f64,
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

#[derive(Args, Debug)]
struct CheckArgs {
    #[arg(long, default_value_t = 2024)]
    seed: u64,
    #[arg(long, value_delimiter = ',')]
    sizes: Option<Vec<usize>>,
    /// Test hook: add this to every entry of the analytic gradient
    #[arg(long, hide = true, default_value_t = 0.0)]
    perturb_grad: f64,
}

/// Solver selection shared by `solve` and `bench`.
#[derive(Debug, Clone)]
pub struct RunOptions {
    pub method: Method,
    pub eps: f64,
    pub max_iter: Option<usize>,
    pub varsigma: (f64, f64, f64),
    pub sm_termination: Termination,
}

impl RunOptions {
    pub fn new(method: Method, eps: f64) -> Self {
        Self {
            method,
            eps,
            max_iter: None,
            varsigma: (1.05, 1.05, 0.95),
            sm_termination: Termination::Canonical,
        }
    }
}

pub fn run_method(
    opts: &RunOptions,
    inst: &Instance,
    bx: &SpectralBox,
    sink: &mut dyn TraceSink,
) -> Result<SolveReport> {
    match opts.method {
        Method::Sm => {
            let mut cfg = SolverConfig::new(opts.eps);
            cfg.max_iter = opts.max_iter;
            cfg.termination = opts.sm_termination;
            solve_smacs_traced(inst, bx, &cfg, sink)
        }
        Method::Vsm => {
            let mut cfg = AdaptiveConfig::new(opts.eps);
            (cfg.varsigma1, cfg.varsigma2, cfg.varsigma3) = opts.varsigma;
            if let Some(m) = opts.max_iter {
                cfg.max_iter = m;
            }
            solve_vsmacs_traced(inst, bx, &cfg, sink)
        }
        Method::Nsa => solve_nsa_traced(
            inst,
            bx,
            opts.eps,
            opts.max_iter.unwrap_or(DEFAULT_NSA_MAX_ITER),
            sink,
        ),
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = write!(err, "{}", e.render());
            return if e.use_stderr() {
                EXIT_BAD_INPUT
            } else {
                EXIT_OK
            };
        }
    };
    let result = match cli.cmd {
        Command::Gen(a) => cmd_gen(a, out),
        Command::Solve(a) => cmd_solve(a, out),
        Command::Bench(a) => cmd_bench(a, out),
        Command::Check(a) => cmd_check(a, out),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_BAD_INPUT
        }
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CovselError::InvalidInput(format!("cannot write {}: {e}", path.display())))
}

fn cmd_gen(a: GenArgs, out: &mut dyn Write) -> Result<i32> {
    let params = GenParams {
        n: a.n,
        density: a.density,
        tau: a.tau,
        theta: a.theta,
        seed: a.seed,
        rho: a.rho,
    };
    let g = generate_detailed(&params)?;
    match &a.out {
        Some(path) => write_instance(create(path)?, &g.instance)?,
        None => write_instance(&mut *out, &g.instance)?,
    }
    let report = format!(
        "n={} seed={} density={} tau={} theta={:e} rho={}\nlambda_min(sigma)={:.6e} lambda_min(B)={:.6e} offdiag_pairs(A)={} density(A)={:.5}",
        a.n,
        a.seed,
        a.density,
        a.tau,
        a.theta,
        a.rho,
        g.lambda_min_sigma,
        g.lambda_min_b,
        g.a_offdiag_pairs,
        g.a_density()
    );
    // keep stdout clean when the instance itself goes there
    if a.out.is_some() {
        writeln!(out, "{report}")?;
    } else {
        eprintln!("{report}");
    }
    Ok(EXIT_OK)
}

fn resolve_box(inst: &Instance, alpha: Option<f64>, beta: Option<f64>) -> Result<SpectralBox> {
    match (alpha, beta) {
        (Some(a), Some(b)) => SpectralBox::new(a, b),
        (None, None) => compute_bounds(inst),
        _ => Err(CovselError::InvalidInput(
            "--alpha and --beta must be given together".into(),
        )),
    }
}

fn cmd_solve(a: SolveArgs, out: &mut dyn Write) -> Result<i32> {
    let file = File::open(&a.input).map_err(|e| {
        CovselError::InvalidInput(format!("cannot read {}: {e}", a.input.display()))
    })?;
    let mut inst = read_instance(BufReader::new(file))?;
    if let Some(rho) = a.rho {
        inst = Instance::new(inst.sigma().clone(), rho)?;
    }
    let bx = if a.auto_bounds {
        compute_bounds(&inst)?
    } else {
        resolve_box(&inst, a.alpha, a.beta)?
    };
    let opts = RunOptions {
        method: a.method,
        eps: a.eps,
        max_iter: a.max_iter,
        varsigma: (a.vs1, a.vs2, a.vs3),
        sm_termination: match a.termination {
            TerminationArg::Canonical => Termination::Canonical,
            TerminationArg::Cheap => Termination::Cheap,
        },
    };
    let report = run_method(&opts, &inst, &bx, &mut NoTrace)?;

    if let Some(path) = &a.trace {
        TraceFile::new(a.method.name(), &inst, &bx, a.eps, a.seed, &report).write(create(path)?)?;
    }
    if let Some(prefix) = &a.dump_solution {
        write_matrix(
            create(Path::new(&format!("{prefix}.x.mat")))?,
            &report.x_star,
        )?;
        write_matrix(
            create(Path::new(&format!("{prefix}.u.mat")))?,
            &report.u_star,
        )?;
    }
    writeln!(
        out,
        "{} {} {} {:.6} {:.6} {:.3e} {} {}",
        a.method.name(),
        inst.n(),
        report.iterations,
        report.primal_obj,
        report.dual_obj,
        report.final_gap,
        report.total_ms,
        report.status.as_str()
    )?;
    Ok(match report.status {
        Status::Converged => EXIT_OK,
        Status::MaxIterReached => EXIT_MAX_ITER,
    })
}

/// One row of the benchmark table.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub n: usize,
    pub seed: u64,
    pub method: Method,
    pub iters: usize,
    pub obj: f64,
    pub gap: f64,
    pub ms: u64,
    pub status: String,
}

pub const BENCH_HEADER: &str = "n,seed,method,iters,obj,gap,ms,status";

impl BenchRow {
    pub fn csv(&self) -> String {
        format!(
            "{},{},{},{},{:.6},{:.6e},{},{}",
            self.n,
            self.seed,
            self.method.name(),
            self.iters,
            self.obj,
            self.gap,
            self.ms,
            self.status
        )
    }
}

/// Runs every `(n, seed, method)` cell. Rows come back sorted by `n`, then
/// `seed`, then the position of the method in `methods`, regardless of
/// completion order.
pub fn bench_rows(
    n_list: &[usize],
    seeds: &[u64],
    methods: &[Method],
    opts: &RunOptions,
    rho: f64,
    bx: Option<SpectralBox>,
    jobs: usize,
) -> Result<Vec<BenchRow>> {
    let mut n_sorted = n_list.to_vec();
    n_sorted.sort_unstable();
    n_sorted.dedup();
    let mut seeds_sorted = seeds.to_vec();
    seeds_sorted.sort_unstable();
    seeds_sorted.dedup();
    let mut cells = Vec::new();
    for &n in &n_sorted {
        for &seed in &seeds_sorted {
            for &m in methods {
                cells.push((n, seed, m));
            }
        }
    }
    let run_cell = |&(n, seed, method): &(usize, u64, Method)| -> BenchRow {
        let mut row = BenchRow {
            n,
            seed,
            method,
            iters: 0,
            obj: f64::NAN,
            gap: f64::NAN,
            ms: 0,
            status: String::new(),
        };
        let outcome = (|| -> Result<SolveReport> {
            let mut p = GenParams::new(n, seed);
            p.rho = rho;
            let inst = generate_detailed(&p)?.instance;
            let bx = match bx {
                Some(b) => b,
                None => compute_bounds(&inst)?,
            };
            let opts = RunOptions {
                method,
                ..opts.clone()
            };
            run_method(&opts, &inst, &bx, &mut NoTrace)
        })();
        match outcome {
            Ok(r) => {
                row.iters = r.iterations;
                row.obj = r.primal_obj;
                row.gap = r.final_gap;
                row.ms = r.total_ms;
                row.status = r.status.as_str().to_owned();
            }
            Err(e) => row.status = format!("error: {e}").replace(',', ";"),
        }
        row
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| CovselError::InvalidInput(format!("thread pool: {e}")))?;
    Ok(pool.install(|| cells.par_iter().map(run_cell).collect()))
}

fn cmd_bench(a: BenchArgs, out: &mut dyn Write) -> Result<i32> {
    let methods = a
        .methods
        .iter()
        .filter(|s| !s.trim().is_empty())
        .map(|s| {
            Method::from_str(s.trim(), true)
                .map_err(|_| CovselError::InvalidInput(format!("unknown method {s:?}")))
        })
        .collect::<Result<Vec<_>>>()?;
    if methods.is_empty() {
        return Err(CovselError::InvalidInput("--methods is empty".into()));
    }
    if a.n_list.is_empty() || a.seeds.is_empty() {
        return Err(CovselError::InvalidInput(
            "--n-list and --seeds must be nonempty".into(),
        ));
    }
    let bx = match (a.alpha, a.beta) {
        (Some(al), Some(be)) => Some(SpectralBox::new(al, be)?),
        (None, None) => None,
        _ => {
            return Err(CovselError::InvalidInput(
                "--alpha and --beta must be given together".into(),
            ))
        }
    };
    if !(a.rho > 0.0) {
        return Err(CovselError::InvalidInput("--rho must be positive".into()));
    }
    let mut opts = RunOptions::new(Method::Sm, a.eps);
    opts.max_iter = a.max_iter;
    let rows = bench_rows(&a.n_list, &a.seeds, &methods, &opts, a.rho, bx, a.jobs)?;

    let mut text = String::from(BENCH_HEADER);
    text.push('\n');
    for r in &rows {
        text.push_str(&r.csv());
        text.push('\n');
    }
    if let Some(path) = &a.csv {
        let mut w = create(path)?;
        w.write_all(text.as_bytes())?;
        w.flush()?;
    }
    out.write_all(text.as_bytes())?;
    Ok(EXIT_OK)
}

fn cmd_check(a: CheckArgs, out: &mut dyn Write) -> Result<i32> {
    let mut cfg = CheckConfig {
        seed: a.seed,
        gradient_perturbation: a.perturb_grad,
        ..CheckConfig::default()
    };
    if let Some(sizes) = a.sizes {
        if sizes.is_empty() || sizes.contains(&0) {
            return Err(CovselError::InvalidInput(
                "--sizes must list positive dimensions".into(),
            ));
        }
        cfg.sizes = sizes;
    }
    let suites = run_all(&cfg)?;
    let mut all_ok = true;
    for s in &suites {
        writeln!(
            out,
            "{:<10} {} passed={} failed={} worst_ratio={:.3e}",
            s.name,
            if s.ok() { "PASS" } else { "FAIL" },
            s.passed,
            s.failed,
            s.worst_ratio
        )?;
        for f in &s.failures {
            writeln!(out, "    {f}")?;
        }
        all_ok &= s.ok();
    }
    Ok(if all_ok { EXIT_OK } else { EXIT_CHECK_FAILED })
}
