//! Command-line surface for the birkhoff library: regularity checks,
//! solving, norming bounds and estimates, minimax fitting, and the
//! univariate norming experiments, all over JSON files.
//!
//! Exit codes: 0 success, 2 mathematical singularity/irregularity,
//! 1 usage, I/O or schema errors.

mod svg;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use birkhoff::fit::{minimax_fit, robust_experiment, FitError, FitProblem, Truth};
use birkhoff::grid::{generate_grid, Domain};
use birkhoff::norming::{norming_bound, remez_theta, NormingError};
use birkhoff::polyspace::Polynomial;
use birkhoff::solver::{
    cardinal_basis_with_tol, estimate_direction_theta, estimate_norming_constant,
    solve_staged_with_tol, SampleSet, Scheme, SolverError,
};
use birkhoff::vandermonde::{check_scheme_regularity_with_tol, DirectionSet, VandermondeError};
use birkhoff::DEFAULT_PIVOT_TOL;

const DEFAULT_GRID: usize = 4096;

#[derive(Parser)]
#[command(
    name = "birkhoff",
    version,
    about = "Multivariate Birkhoff interpolation: regularity, solving, norming bounds, minimax fitting"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check per-degree regularity of a scheme file
    Check {
        scheme: PathBuf,
        /// Pivot-ratio threshold in (0, 1)
        #[arg(long, default_value_t = DEFAULT_PIVOT_TOL)]
        pivot_tol: f64,
    },
    /// Solve an exact regular scheme against a sample file
    Solve {
        scheme: PathBuf,
        samples: PathBuf,
        /// Output path for the polynomial JSON
        out: PathBuf,
        #[arg(long, default_value_t = DEFAULT_PIVOT_TOL)]
        pivot_tol: f64,
    },
    /// Evaluate a polynomial file at a point
    Eval {
        poly: PathBuf,
        /// Comma-separated coordinates
        #[arg(long, value_delimiter = ',', required = true)]
        at: Vec<f64>,
    },
    /// Norming bound ladder from per-degree theta values or a Remez omega
    Bound {
        /// Comma-separated theta_0..theta_d
        #[arg(long, value_delimiter = ',', conflicts_with = "omega")]
        thetas: Option<Vec<f64>>,
        /// Remez density in (0, 1]; computes theta_k for all k
        #[arg(long, requires = "n", requires = "d")]
        omega: Option<f64>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        d: Option<usize>,
    },
    /// Grid estimate of the norming constant of an exact regular scheme
    Estimate {
        scheme: PathBuf,
        #[arg(long)]
        grid: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Write an SVG of the Lebesgue function (univariate schemes only)
        #[arg(long)]
        plot: Option<PathBuf>,
    },
    /// Grid estimate of the homogeneous norming constant of a direction set
    Theta {
        directions: PathBuf,
        #[arg(long)]
        grid: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Minimax fit of a (possibly overdetermined) sample set
    Fit {
        scheme: PathBuf,
        samples: PathBuf,
        /// Output path for the polynomial JSON
        out: PathBuf,
        /// Fit degree; defaults to the scheme degree
        #[arg(long)]
        degree: Option<usize>,
    },
    /// Noisy-reconstruction experiment against a polynomial truth
    Robust {
        scheme: PathBuf,
        truth: PathBuf,
        /// Noise amplitude (uniform in [-h, h])
        #[arg(long)]
        h: f64,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        grid: Option<usize>,
    },
    /// Univariate norming experiment: Taylor or equidistant designs on [0, 1]
    #[command(name = "taylor-exp")]
    TaylorExp {
        #[arg(long)]
        d_max: usize,
        #[arg(long, value_enum, default_value_t = PointsMode::Taylor)]
        points: PointsMode,
        #[arg(long)]
        grid: Option<usize>,
        /// Additionally report this many random order-to-point permutations
        /// per degree (no threshold is asserted on them)
        #[arg(long, default_value_t = 0)]
        permutations: usize,
        #[arg(long)]
        seed: Option<u64>,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum PointsMode {
    Taylor,
    Equidistant,
}

enum CliError {
    /// Usage, I/O or schema problems: exit 1.
    Usage(String),
    /// Mathematical singularity or irregularity: exit 2.
    Singular(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Singular(_) => 2,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Singular(m) => m,
        }
    }
}

fn usage<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Usage(e.to_string())
}

/// Solver errors split by exit-code contract: singular systems are
/// mathematical (2), everything else is usage/schema (1).
fn solver_error(e: SolverError) -> CliError {
    match e {
        SolverError::SingularDegree { .. } | SolverError::SingularDirections { .. } => {
            CliError::Singular(e.to_string())
        }
        other => CliError::Usage(other.to_string()),
    }
}

fn fit_error(e: FitError) -> CliError {
    match e {
        FitError::Solver(inner) => solver_error(inner),
        FitError::SchemeNotNorming { .. } => CliError::Singular(e.to_string()),
        other => CliError::Usage(other.to_string()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version are not errors.
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            eprint!("{e}");
            return ExitCode::from(1);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}

fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Check { scheme, pivot_tol } => cmd_check(&scheme, pivot_tol),
        Command::Solve {
            scheme,
            samples,
            out,
            pivot_tol,
        } => cmd_solve(&scheme, &samples, &out, pivot_tol),
        Command::Eval { poly, at } => cmd_eval(&poly, &at),
        Command::Bound {
            thetas,
            omega,
            n,
            d,
        } => cmd_bound(thetas, omega, n, d),
        Command::Estimate {
            scheme,
            grid,
            seed,
            plot,
        } => cmd_estimate(&scheme, grid_size(grid)?, resolve_seed(seed)?, plot.as_deref()),
        Command::Theta {
            directions,
            grid,
            seed,
        } => cmd_theta(&directions, grid_size(grid)?, resolve_seed(seed)?),
        Command::Fit {
            scheme,
            samples,
            out,
            degree,
        } => cmd_fit(&scheme, &samples, &out, degree),
        Command::Robust {
            scheme,
            truth,
            h,
            trials,
            seed,
            grid,
        } => cmd_robust(&scheme, &truth, h, trials, resolve_seed(seed)?, grid_size(grid)?),
        Command::TaylorExp {
            d_max,
            points,
            grid,
            permutations,
            seed,
        } => cmd_taylor_exp(d_max, points, grid_size(grid)?, permutations, resolve_seed(seed)?),
    }
}

/// Seed precedence: --seed flag, then BIRKHOFF_SEED, then 0.
fn resolve_seed(flag: Option<u64>) -> Result<u64, CliError> {
    if let Some(s) = flag {
        return Ok(s);
    }
    match std::env::var("BIRKHOFF_SEED") {
        Ok(v) => v
            .parse::<u64>()
            .map_err(|_| CliError::Usage(format!("BIRKHOFF_SEED is not a u64: {v:?}"))),
        Err(_) => Ok(0),
    }
}

fn grid_size(flag: Option<usize>) -> Result<usize, CliError> {
    let g = flag.unwrap_or(DEFAULT_GRID);
    if g == 0 {
        return Err(CliError::Usage("grid size must be positive".into()));
    }
    Ok(g)
}

fn check_pivot_tol(tol: f64) -> Result<f64, CliError> {
    if !(tol > 0.0 && tol < 1.0) {
        return Err(CliError::Usage(format!(
            "pivot tolerance must lie in (0, 1), got {tol}"
        )));
    }
    Ok(tol)
}

/// Writes one line to stdout. A broken pipe (the consumer stopped reading,
/// e.g. `birkhoff taylor-exp | head`) ends the process quietly instead of
/// panicking.
fn emit(line: std::fmt::Arguments) {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    if let Err(e) = writeln!(out, "{line}") {
        if e.kind() == std::io::ErrorKind::BrokenPipe {
            std::process::exit(0);
        }
        eprintln!("error: cannot write to stdout: {e}");
        std::process::exit(1);
    }
}

macro_rules! outln {
    ($($arg:tt)*) => { emit(format_args!($($arg)*)) };
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path, what: &str) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read {what} {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Usage(format!("invalid {what} {}: {e}", path.display())))
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(usage)?;
    text.push('\n');
    std::fs::write(path, text)
        .map_err(|e| CliError::Usage(format!("cannot write {}: {e}", path.display())))
}

fn print_json<T: serde::Serialize>(value: &T) -> Result<(), CliError> {
    outln!("{}", serde_json::to_string_pretty(value).map_err(usage)?);
    Ok(())
}

fn vandermonde_error(e: VandermondeError) -> CliError {
    CliError::Usage(e.to_string())
}

fn cmd_check(scheme_path: &Path, pivot_tol: f64) -> Result<(), CliError> {
    let tol = check_pivot_tol(pivot_tol)?;
    let scheme: Scheme = read_json(scheme_path, "scheme")?;
    let report = check_scheme_regularity_with_tol(&scheme, tol).map_err(vandermonde_error)?;
    print_json(&report)?;
    if report.regular {
        Ok(())
    } else {
        Err(CliError::Singular(format!(
            "scheme is irregular at degrees {:?}",
            report.failing_degrees
        )))
    }
}

fn cmd_solve(
    scheme_path: &Path,
    samples_path: &Path,
    out: &Path,
    pivot_tol: f64,
) -> Result<(), CliError> {
    let tol = check_pivot_tol(pivot_tol)?;
    let scheme: Scheme = read_json(scheme_path, "scheme")?;
    let samples: SampleSet = read_json(samples_path, "sample set")?;
    let p = solve_staged_with_tol(&scheme, &samples, tol).map_err(solver_error)?;
    write_json(out, &p)?;
    let residuals = scheme.apply_all(&p).map_err(solver_error)?;
    let max_residual = residuals
        .iter()
        .zip(&samples.values)
        .fold(0.0f64, |a, (w, v)| a.max((w - v).abs()));
    outln!("max residual: {max_residual:e}");
    Ok(())
}

fn cmd_eval(poly_path: &Path, at: &[f64]) -> Result<(), CliError> {
    let p: Polynomial = read_json(poly_path, "polynomial")?;
    let value = p.eval(at).map_err(usage)?;
    outln!("{value}");
    Ok(())
}

fn cmd_bound(
    thetas: Option<Vec<f64>>,
    omega: Option<f64>,
    n: Option<usize>,
    d: Option<usize>,
) -> Result<(), CliError> {
    let norming_error = |e: NormingError| CliError::Usage(e.to_string());
    let theta: Vec<f64> = match (thetas, omega) {
        (Some(t), None) => {
            if let Some(d) = d {
                if t.len() != d + 1 {
                    return Err(CliError::Usage(format!(
                        "--thetas needs d+1 = {} values, got {}",
                        d + 1,
                        t.len()
                    )));
                }
            }
            t
        }
        (None, Some(w)) => {
            let (n, d) = (n.expect("clap requires --n"), d.expect("clap requires --d"));
            (0..=d)
                .map(|_| remez_theta(w, n, d))
                .collect::<Result<_, _>>()
                .map_err(norming_error)?
        }
        _ => {
            return Err(CliError::Usage(
                "exactly one of --thetas or --omega is required".into(),
            ))
        }
    };
    let degree = theta.len() - 1;
    let trace = norming_bound(&theta, degree).map_err(norming_error)?;
    print_json(&trace)
}

fn cmd_estimate(
    scheme_path: &Path,
    grid: usize,
    seed: u64,
    plot: Option<&Path>,
) -> Result<(), CliError> {
    let scheme: Scheme = read_json(scheme_path, "scheme")?;
    let estimate = estimate_norming_constant(&scheme, scheme.domain(), grid, seed)
        .map_err(solver_error)?;
    print_json(&json!({
        "estimate": estimate,
        "grid_size": grid,
        "seed": seed,
        "domain": scheme.domain(),
    }))?;
    if let Some(svg_path) = plot {
        write_lebesgue_plot(&scheme, grid, seed, svg_path)?;
    }
    Ok(())
}

fn write_lebesgue_plot(
    scheme: &Scheme,
    grid: usize,
    seed: u64,
    out: &Path,
) -> Result<(), CliError> {
    if scheme.n() != 1 {
        return Err(CliError::Usage(format!(
            "--plot draws the univariate Lebesgue function; scheme has n = {}",
            scheme.n()
        )));
    }
    let basis = cardinal_basis_with_tol(scheme, DEFAULT_PIVOT_TOL).map_err(solver_error)?;
    let points = generate_grid(scheme.domain(), 1, grid, seed).map_err(usage)?;
    let mut samples: Vec<(f64, f64)> = points
        .iter()
        .map(|x| {
            let lambda: f64 = basis
                .iter()
                .map(|l| l.eval(x).map(f64::abs))
                .sum::<Result<f64, _>>()
                .map_err(usage)?;
            Ok((x[0], lambda))
        })
        .collect::<Result<_, CliError>>()?;
    samples.sort_by(|a, b| a.0.total_cmp(&b.0));
    std::fs::write(out, svg::lebesgue_plot(&samples))
        .map_err(|e| CliError::Usage(format!("cannot write {}: {e}", out.display())))?;
    Ok(())
}

fn cmd_theta(directions_path: &Path, grid: usize, seed: u64) -> Result<(), CliError> {
    let ds: DirectionSet = read_json(directions_path, "direction set")?;
    // The norming framework assumes directions inside the unit ball; longer
    // vectors are normalized before estimation, so warn rather than fail.
    for (i, norm) in ds.norms().iter().enumerate() {
        if *norm > 1.0 + 1e-12 {
            eprintln!("warning: direction {i} has length {norm} > 1; it is normalized before estimation");
        }
    }
    let theta = estimate_direction_theta(&ds, &Domain::unit_ball(), grid, seed)
        .map_err(solver_error)?;
    print_json(&json!({
        "theta": theta,
        "n": ds.n(),
        "k": ds.k(),
        "grid_size": grid,
        "seed": seed,
    }))
}

fn cmd_fit(
    scheme_path: &Path,
    samples_path: &Path,
    out: &Path,
    degree: Option<usize>,
) -> Result<(), CliError> {
    let scheme: Scheme = read_json(scheme_path, "scheme")?;
    let samples: SampleSet = read_json(samples_path, "sample set")?;
    let degree = degree.unwrap_or(scheme.d());
    let result = minimax_fit(&FitProblem {
        scheme,
        values: samples.values,
        degree,
    })
    .map_err(fit_error)?;
    write_json(out, &result.polynomial)?;
    print_json(&json!({
        "achieved_residual": result.achieved_residual,
        "iterations": result.iterations,
    }))
}

fn cmd_robust(
    scheme_path: &Path,
    truth_path: &Path,
    h: f64,
    trials: usize,
    seed: u64,
    grid: usize,
) -> Result<(), CliError> {
    let scheme: Scheme = read_json(scheme_path, "scheme")?;
    let truth: Polynomial = read_json(truth_path, "truth polynomial")?;
    let report = robust_experiment(&Truth::Polynomial(&truth), &scheme, h, trials, seed, grid)
        .map_err(fit_error)?;
    print_json(&report)
}

fn cmd_taylor_exp(
    d_max: usize,
    points: PointsMode,
    grid: usize,
    permutations: usize,
    seed: u64,
) -> Result<(), CliError> {
    if d_max < 1 {
        return Err(CliError::Usage("--d-max must be at least 1".into()));
    }
    let base_points = |d: usize| -> Vec<f64> {
        match points {
            PointsMode::Taylor => vec![0.0; d + 1],
            PointsMode::Equidistant => (0..=d).map(|k| k as f64 / d as f64).collect(),
        }
    };
    if permutations == 0 {
        outln!("d,estimate");
        for d in 1..=d_max {
            let scheme = Scheme::univariate_with_points(&base_points(d), Domain::unit_interval());
            let estimate = estimate_norming_constant(&scheme, &Domain::unit_interval(), grid, 0)
                .map_err(solver_error)?;
            outln!("{d},{estimate}");
        }
        return Ok(());
    }
    // Permutation experiment: reassign which point carries which derivative
    // order and report the norming estimate of every variant. Values only;
    // no threshold is known for permuted sequences.
    outln!("d,permutation,estimate");
    for d in 1..=d_max {
        let natural = base_points(d);
        for perm in 0..=permutations {
            let mut pts = natural.clone();
            if perm > 0 {
                shuffle(&mut pts, seed ^ ((d as u64) << 32) ^ perm as u64);
            }
            let scheme = Scheme::univariate_with_points(&pts, Domain::unit_interval());
            let estimate = estimate_norming_constant(&scheme, &Domain::unit_interval(), grid, 0)
                .map_err(solver_error)?;
            outln!("{d},{perm},{estimate}");
        }
    }
    Ok(())
}

/// Seeded Fisher-Yates over a splitmix64 stream; dependency-free and
/// platform-stable.
fn shuffle(values: &mut [f64], seed: u64) {
    let mut state = seed;
    let mut next = move || {
        state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
        let mut z = state;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    };
    for i in (1..values.len()).rev() {
        let j = (next() % (i as u64 + 1)) as usize;
        values.swap(i, j);
    }
}
