//! `fracgal`: solve, verify and study time-fractional elliptic problems.
//!
//! Exit codes: 0 success, 1 a verification check failed, 2 invalid input
//! or a violated assumption, 3 the solver did not converge.

mod output;

use std::collections::{BTreeMap, HashMap};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde_json::json;

use fracgal_core::fode::{l1_solve, picard_solve};
use fracgal_core::problem::GalerkinSystem;
use fracgal_core::spectral::modal_norms;
use fracgal_core::verify::{l2_time_distance, verify_problem, yosida_study};
use fracgal_core::{
    mittag_leffler, Error, MLParams, ModalTrajectory, PicardConfig, PicardLog, ProblemSpec, Scheme, VerifyOptions,
};

use output::{csv_bytes, field, sig17, Sink};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] Error),
    #[error("{0}: {1}")]
    Io(PathBuf, std::io::Error),
    #[error("csv output: {0}")]
    Csv(csv::Error),
    #[error("json output: {0}")]
    Json(serde_json::Error),
    #[error("{0}")]
    Usage(String),
    #[error("verification failed: {0}")]
    ChecksFailed(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::ChecksFailed(_) => 1,
            CliError::Core(Error::NoConvergence { .. } | Error::NonFinite { .. } | Error::SingularStep { .. }) => 3,
            _ => 2,
        }
    }
}

#[derive(Parser)]
#[command(
    name = "fracgal",
    version,
    about = "Spectral-Galerkin solver for time-fractional elliptic problems"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate the Mittag-Leffler function E_{α,β}(z)
    Mlf {
        #[arg(long, allow_negative_numbers = true)]
        alpha: f64,
        #[arg(long, allow_negative_numbers = true)]
        beta: f64,
        #[arg(long, allow_negative_numbers = true)]
        z: f64,
    },
    /// Solve a problem file and write the modal trajectory as CSV
    Solve(RunArgs),
    /// Solve and evaluate the a-priori estimates; exit 1 if any fails
    Verify {
        #[command(flatten)]
        run: RunArgs,
        /// override the Gårding shift ν (negative tests)
        #[arg(long)]
        nu: Option<f64>,
    },
    /// Galerkin convergence d_N = ‖u_2N − u_N‖ and Picard/L1 agreement
    Converge {
        problem: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        modes: Vec<usize>,
        #[arg(long, value_delimiter = ',', required = true)]
        steps: Vec<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Yosida kernel residual, D_n and the h_n proxy
    Yosida {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long = "n", value_delimiter = ',', required = true)]
        ns: Vec<u32>,
    },
}

#[derive(Args)]
struct RunArgs {
    problem: PathBuf,
    #[arg(long)]
    scheme: Option<Scheme>,
    #[arg(long)]
    modes: Option<usize>,
    #[arg(long)]
    steps: Option<usize>,
    /// weight of the Picard norm (picard scheme only; default automatic)
    #[arg(long)]
    gamma: Option<f64>,
    /// Picard sweep limit (picard scheme only; default max(200, M + 1))
    #[arg(long)]
    max_iters: Option<usize>,
    /// write data and metadata files here instead of printing to stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

impl RunArgs {
    fn load(&self) -> Result<ProblemSpec, CliError> {
        let mut spec = load_problem(&self.problem)?;
        let d = &mut spec.discretization;
        if let Some(s) = self.scheme {
            d.scheme = s;
        }
        if let Some(n) = self.modes {
            d.modes = n;
        }
        if let Some(m) = self.steps {
            d.steps = m;
        }
        if d.modes == 0 || d.steps < 2 {
            return Err(CliError::Usage("need --modes ≥ 1 and --steps ≥ 2".into()));
        }
        Ok(spec)
    }

    fn picard(&self, scheme: Scheme) -> Result<PicardConfig, CliError> {
        if scheme == Scheme::L1 && (self.gamma.is_some() || self.max_iters.is_some()) {
            return Err(CliError::Usage(
                "--gamma and --max-iters apply to the picard scheme only".into(),
            ));
        }
        let mut cfg = match self.gamma {
            None => PicardConfig::default(),
            Some(g) if !(g > 0.0 && g.is_finite()) => {
                return Err(CliError::Usage(format!("--gamma must be positive, got {g}")));
            }
            Some(g) => PicardConfig::with_gamma(g),
        };
        match self.max_iters {
            Some(0) => return Err(CliError::Usage("--max-iters must be ≥ 1".into())),
            Some(k) => cfg.max_iters = Some(k),
            None => {}
        }
        Ok(cfg)
    }
}

fn load_problem(path: &PathBuf) -> Result<ProblemSpec, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(path.clone(), e))?;
    Ok(ProblemSpec::parse(&text)?)
}

fn problem_echo(path: &std::path::Path, spec: &ProblemSpec) -> serde_json::Value {
    json!({
        "file": path.display().to_string(),
        "alpha": spec.alpha,
        "T": spec.horizon,
        "dim": spec.geometry.dim(),
        "lengths": spec.geometry.lengths(),
        "modes": spec.discretization.modes,
        "steps": spec.discretization.steps,
        "scheme": spec.discretization.scheme,
    })
}

fn picard_echo(log: Option<&PicardLog>) -> serde_json::Value {
    match log {
        None => serde_json::Value::Null,
        Some(l) => json!({
            "gamma": l.gamma,
            "contraction_bound": l.contraction_bound,
            "sweeps": l.iterations,
            "weighted_iterations": l.weighted_iterations,
            "observed_ratio": l.observed_ratio,
        }),
    }
}

struct Solved {
    sys: GalerkinSystem,
    traj: ModalTrajectory,
    log: Option<PicardLog>,
    timings: BTreeMap<&'static str, f64>,
}

fn solve_timed(spec: &ProblemSpec, cfg: &PicardConfig) -> Result<Solved, CliError> {
    let t0 = Instant::now();
    let sys = spec.galerkin_system()?;
    let t1 = Instant::now();
    let (traj, log) = sys.solve(spec.discretization.scheme, cfg)?;
    let timings = BTreeMap::from([
        ("assemble_s", (t1 - t0).as_secs_f64()),
        ("solve_s", t1.elapsed().as_secs_f64()),
    ]);
    Ok(Solved {
        sys,
        traj,
        log,
        timings,
    })
}

fn cmd_mlf(alpha: f64, beta: f64, z: f64) -> Result<(), CliError> {
    let v = mittag_leffler(MLParams::new(alpha, beta)?, z)?;
    println!("{}", sig17(v));
    Ok(())
}

fn cmd_solve(args: &RunArgs) -> Result<(), CliError> {
    let spec = args.load()?;
    let cfg = args.picard(spec.discretization.scheme)?;
    let Solved {
        sys,
        traj,
        log,
        timings,
    } = solve_timed(&spec, &cfg)?;
    let n = traj.dim();
    let mut header = vec!["t".to_string()];
    header.extend((1..=n).map(|i| format!("c{i}")));
    header.extend(["l2".to_string(), "h10".to_string()]);
    let rows = traj
        .values
        .iter()
        .enumerate()
        .map(|(m, c)| {
            let norms = modal_norms(&sys.basis, c.as_slice())?;
            let mut row = vec![field(traj.grid.t(m))];
            row.extend(c.iter().map(|&v| field(v)));
            row.extend([field(norms.l2), field(norms.h10)]);
            Ok(row)
        })
        .collect::<Result<Vec<_>, Error>>()?;
    let sink = Sink::new(args.out.clone(), "trajectory")?;
    sink.data("csv", &csv_bytes(&header, &rows)?)?;
    sink.metadata(&json!({
        "command": "solve",
        "version": env!("CARGO_PKG_VERSION"),
        "problem": problem_echo(&args.problem, &spec),
        "picard": picard_echo(log.as_ref()),
        "timings": timings,
    }))
}

fn cmd_verify(args: &RunArgs, nu: Option<f64>) -> Result<(), CliError> {
    let spec = args.load()?;
    let picard = args.picard(Scheme::Picard)?;
    let t0 = Instant::now();
    let report = verify_problem(&spec, &VerifyOptions { nu, picard })?;
    let mut text = serde_json::to_string_pretty(&report).map_err(CliError::Json)?;
    text.push('\n');
    let sink = Sink::new(args.out.clone(), "report")?;
    sink.data("json", text.as_bytes())?;
    sink.metadata(&json!({
        "command": "verify",
        "version": env!("CARGO_PKG_VERSION"),
        "problem": problem_echo(&args.problem, &spec),
        "nu_override": nu,
        "timings": { "total_s": t0.elapsed().as_secs_f64() },
    }))?;
    if report.passed {
        Ok(())
    } else {
        let failed: Vec<&str> = report
            .checks
            .iter()
            .filter(|c| !c.pass)
            .map(|c| c.name.as_str())
            .collect();
        Err(CliError::ChecksFailed(failed.join(", ")))
    }
}

fn cmd_converge(problem: &PathBuf, modes: &[usize], steps: &[usize], out: Option<PathBuf>) -> Result<(), CliError> {
    if modes.contains(&0) || steps.iter().any(|&m| m < 2) {
        return Err(CliError::Usage("mode counts must be ≥ 1 and step counts ≥ 2".into()));
    }
    let spec = load_problem(problem)?;
    let cfg = PicardConfig::default();
    // every (N, M) and (2N, M) pair is an independent run
    let mut jobs: Vec<(usize, usize)> = steps
        .iter()
        .flat_map(|&m| modes.iter().flat_map(move |&n| [(n, m), (2 * n, m)]))
        .collect();
    jobs.sort_unstable();
    jobs.dedup();
    struct Run {
        l1: ModalTrajectory,
        picard: Option<ModalTrajectory>,
        seconds: f64,
    }
    let results: Vec<((usize, usize), Run)> = jobs
        .par_iter()
        .map(|&(n, m)| {
            let t0 = Instant::now();
            let sys = spec.with_discretization(n, m).galerkin_system()?;
            let l1 = l1_solve(&sys.ivp)?;
            let picard = if modes.contains(&n) {
                Some(picard_solve(&sys.ivp, &cfg)?.0)
            } else {
                None
            };
            Ok((
                (n, m),
                Run {
                    l1,
                    picard,
                    seconds: t0.elapsed().as_secs_f64(),
                },
            ))
        })
        .collect::<Result<_, Error>>()?;
    let runs: HashMap<_, _> = results.into_iter().collect();

    let header: Vec<String> = ["modes", "steps", "d_n", "picard_l1"].map(String::from).to_vec();
    let mut rows = Vec::new();
    let mut seconds = Vec::new();
    for &m in steps {
        for &n in modes {
            let (run, fine) = (&runs[&(n, m)], &runs[&(2 * n, m)]);
            let picard = run.picard.as_ref().expect("picard run for listed mode count");
            rows.push(vec![
                n.to_string(),
                m.to_string(),
                field(l2_time_distance(&run.l1, &fine.l1)?),
                field(run.l1.sup_distance(picard)?),
            ]);
            seconds.push(json!({ "modes": n, "steps": m, "seconds": run.seconds + fine.seconds }));
        }
    }
    let sink = Sink::new(out, "converge")?;
    sink.data("csv", &csv_bytes(&header, &rows)?)?;
    sink.metadata(&json!({
        "command": "converge",
        "version": env!("CARGO_PKG_VERSION"),
        "problem": problem_echo(problem, &spec),
        "timings": seconds,
    }))
}

fn cmd_yosida(args: &RunArgs, ns: &[u32]) -> Result<(), CliError> {
    let spec = args.load()?;
    let cfg = args.picard(spec.discretization.scheme)?;
    let Solved {
        sys,
        traj,
        log,
        mut timings,
    } = solve_timed(&spec, &cfg)?;
    let t0 = Instant::now();
    let table = yosida_study(&traj, &sys.basis.eigenvalues(), ns)?;
    timings.insert("study_s", t0.elapsed().as_secs_f64());
    let header: Vec<String> = ["n", "kernel_residual", "d_n", "h_n"].map(String::from).to_vec();
    let rows: Vec<Vec<String>> = table
        .iter()
        .map(|r| vec![r.n.to_string(), field(r.kernel_residual), field(r.d_n), field(r.h_n)])
        .collect();
    let sink = Sink::new(args.out.clone(), "yosida")?;
    sink.data("csv", &csv_bytes(&header, &rows)?)?;
    sink.metadata(&json!({
        "command": "yosida",
        "version": env!("CARGO_PKG_VERSION"),
        "problem": problem_echo(&args.problem, &spec),
        "picard": picard_echo(log.as_ref()),
        "timings": timings,
    }))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Mlf { alpha, beta, z } => cmd_mlf(*alpha, *beta, *z),
        Command::Solve(args) => cmd_solve(args),
        Command::Verify { run, nu } => cmd_verify(run, *nu),
        Command::Converge {
            problem,
            modes,
            steps,
            out,
        } => cmd_converge(problem, modes, steps, out.clone()),
        Command::Yosida { run, ns } => cmd_yosida(run, ns),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("fracgal: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
