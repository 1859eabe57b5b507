//! `curveflow`: solve curve specs, sample their fields, validate solutions,
//! compare discretizations and serve the HTTP API.
//!
//! Exit codes: 0 ok, 1 a validation check failed, 2 unreadable or malformed
//! input, 3 input that decodes but is invalid, 4 numeric failure.

use std::fs;
use std::io::{self, BufWriter, Write};
use std::net::{IpAddr, SocketAddr};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use curveflow::baselines::{residual_profile, solve_with, Method, ResidualProfile, SampleKind};
use curveflow::io::{read_points_csv, write_field_csv, CurveSpecFile, IoError, SolutionFile};
use curveflow::numcheck::{curl_of, fd_divergence_with_norm, fd_jacobian, FdConfig};
use curveflow::{sample_grid, solve, CurveSet, ErrorClass, GridSpec, Point, Solution, SolveMode};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

#[derive(Parser)]
#[command(name = "curveflow", version, about = "Divergence-free velocity fields from curve constraints")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a curve spec and write the solution document.
    Solve {
        spec: PathBuf,
        /// Override the spec's solve mode (velocity, angular, coupled, decoupled).
        #[arg(long)]
        mode: Option<SolveMode>,
        /// Output file; stdout when omitted.
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Evaluate a solution at the points of a CSV file (header x,y[,z]).
    Eval {
        solution: PathBuf,
        points: PathBuf,
        #[arg(short, long)]
        out: Option<PathBuf>,
        /// Also write the angular velocity (3D only).
        #[arg(long)]
        angular: bool,
    },
    /// Sample a solution on a node-inclusive grid.
    Grid {
        solution: PathBuf,
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true, required = true)]
        min: Vec<f64>,
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true, required = true)]
        max: Vec<f64>,
        #[arg(long, value_delimiter = ',', required = true)]
        res: Vec<usize>,
        #[arg(short, long)]
        out: Option<PathBuf>,
        #[arg(long)]
        angular: bool,
    },
    /// Check incompressibility, the curl identity and the solver residual.
    Validate {
        solution: PathBuf,
        /// Number of random sample points.
        #[arg(long, default_value_t = 100)]
        samples: usize,
        /// Finite-difference step; defaults to 1e-4 of the scene diagonal.
        #[arg(long)]
        fd_step: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Solve with one discretization and report its constraint residuals.
    Baseline {
        spec: PathBuf,
        #[arg(long, default_value = "galerkin")]
        method: Method,
        /// Print a JSON object instead of a table.
        #[arg(long)]
        json: bool,
    },
    /// Run the HTTP API.
    Serve {
        #[arg(long, default_value_t = curveflow_service::DEFAULT_PORT)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: IpAddr,
    },
}

/// Largest tolerated `|div| / (|J|_F + 1e-12)`.
const DIVERGENCE_TOL: f64 = 1e-4;
/// Largest tolerated relative mismatch between the angular velocity and half
/// the finite-difference curl.
const CURL_TOL: f64 = 1e-4;
/// Largest tolerated relative residual of the stored solve.
const RESIDUAL_TOL: f64 = 1e-8;

enum Failure {
    Input(ErrorClass, String),
    Check,
}

impl From<IoError> for Failure {
    fn from(e: IoError) -> Self {
        Failure::Input(e.class(), e.to_string())
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        IoError::Io(e).into()
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Input(ErrorClass::Parse, format!("{}: {e}", path.display())))
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>, Failure> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(fs::File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn load_solution(path: &Path) -> Result<Solution, Failure> {
    Ok(SolutionFile::from_json(&read(path)?)?.to_solution()?)
}

fn load_spec(path: &Path) -> Result<(CurveSpecFile, CurveSet), Failure> {
    let spec = CurveSpecFile::from_json(&read(path)?)?;
    let cs = spec.curveset()?;
    Ok((spec, cs))
}

fn cmd_solve(spec: &Path, mode: Option<SolveMode>, out: Option<&Path>) -> Result<(), Failure> {
    let (spec, cs) = load_spec(spec)?;
    let mode = mode.unwrap_or(spec.mode);
    let start = Instant::now();
    let sol = solve(&cs, mode).map_err(|e| Failure::Input(e.class(), e.to_string()))?;
    let elapsed = start.elapsed();
    let mut w = output(out)?;
    writeln!(w, "{}", SolutionFile::from_solution(&sol).to_json())?;
    w.flush()?;
    let sizes: Vec<String> = sol.stats().iter().map(|s| format!("{0}x{0}", s.size)).collect();
    eprintln!(
        "solved N={} mode={} matrix {} relative residual {:.3e} in {:.3} s",
        cs.vertex_count(),
        mode.name(),
        sizes.join(" + "),
        sol.relative_residual(),
        elapsed.as_secs_f64()
    );
    Ok(())
}

fn cmd_eval(solution: &Path, points: &Path, out: Option<&Path>, angular: bool) -> Result<(), Failure> {
    let sol = load_solution(solution)?;
    let file = fs::File::open(points).map_err(|e| Failure::Input(ErrorClass::Parse, format!("{}: {e}", points.display())))?;
    let pts = read_points_csv(file, sol.dimension())?;
    let samples = sol
        .sample_points(&pts, angular)
        .map_err(|e| Failure::Input(e.class(), e.to_string()))?;
    let mut w = output(out)?;
    write_field_csv(&mut w, sol.dimension(), &samples, angular)?;
    w.flush()?;
    Ok(())
}

fn cmd_grid(solution: &Path, grid: GridSpec, out: Option<&Path>, angular: bool) -> Result<(), Failure> {
    let sol = load_solution(solution)?;
    let samples = sample_grid(&sol, &grid, angular).map_err(|e| Failure::Input(e.class(), e.to_string()))?;
    let mut w = output(out)?;
    write_field_csv(&mut w, sol.dimension(), &samples, angular)?;
    w.flush()?;
    Ok(())
}

fn random_points(rng: &mut ChaCha8Rng, cs: &CurveSet, n: usize, planar: bool) -> Vec<Point> {
    let (lo, hi) = cs.bounding_box();
    let pad = 0.25 * cs.bbox_diagonal().max(cs.max_eps());
    let axes = if planar { 2 } else { cs.dimension() };
    let mut points = Vec::with_capacity(n);
    let mut attempts = 0;
    while points.len() < n && attempts < 1000 * n {
        attempts += 1;
        let mut p = Point::zeros();
        for k in 0..axes {
            p[k] = rng.gen_range(lo[k] - pad..=hi[k] + pad);
        }
        if cs.distance_to(&p) >= cs.min_eps() {
            points.push(p);
        }
    }
    points
}

/// Worst `|div| / (tol (|J|_F + 1e-12))` over `points`; values above 1 fail.
fn divergence_ratio(sol: &Solution, points: &[Point], cfg: &FdConfig, planar: bool) -> Result<f64, Failure> {
    let mut worst: f64 = 0.0;
    for x in points {
        let (div, norm) = if planar {
            fd_divergence_with_norm(
                |p: &[f64; 2]| {
                    let u = sol.velocity_at(&Point::new(p[0], p[1], x.z));
                    [u.x, u.y]
                },
                &[x.x, x.y],
                cfg,
            )
        } else {
            fd_divergence_with_norm(
                |p: &[f64; 3]| {
                    let u = sol.velocity_at(&Point::new(p[0], p[1], p[2]));
                    [u.x, u.y, u.z]
                },
                &[x.x, x.y, x.z],
                cfg,
            )
        }
        .map_err(|e| Failure::Input(e.class(), e.to_string()))?;
        worst = worst.max(div.abs() / (DIVERGENCE_TOL * (norm + 1e-12)));
    }
    Ok(worst)
}

fn curl_error(sol: &Solution, points: &[Point], cfg: &FdConfig) -> Result<f64, Failure> {
    let mut worst: f64 = 0.0;
    for x in points {
        let j = fd_jacobian(
            |p: &[f64; 3]| {
                let u = sol.velocity_at(&Point::new(p[0], p[1], p[2]));
                [u.x, u.y, u.z]
            },
            &[x.x, x.y, x.z],
            cfg,
        )
        .map_err(|e| Failure::Input(e.class(), e.to_string()))?;
        let c = curl_of(&j);
        let half = Point::new(c[0], c[1], c[2]) * 0.5;
        let w = sol.angular_velocity_at(x).expect("3D solution");
        let err = (w - half).norm();
        if err > 0.0 {
            worst = worst.max(err / half.norm().max(w.norm()));
        }
    }
    Ok(worst)
}

fn verdict(pass: bool) -> &'static str {
    if pass {
        "PASS"
    } else {
        "FAIL"
    }
}

fn print_profile(p: &ResidualProfile) {
    println!(
        "profile     rms {:.3e}  max {:.3e}  vertex rms {:.3e}  midpoint rms {:.3e}  ({} samples)",
        p.rms,
        p.max,
        p.rms_at(SampleKind::Vertex),
        p.rms_at(SampleKind::Midpoint),
        p.samples.len()
    );
}

fn cmd_validate(solution: &Path, samples: usize, fd_step: Option<f64>, seed: u64) -> Result<(), Failure> {
    let sol = load_solution(solution)?;
    let cs = sol.curveset();
    let cfg = match fd_step {
        Some(h) if h > 0.0 && h.is_finite() => FdConfig::new(h, true),
        Some(h) => return Err(Failure::Input(ErrorClass::Validation, format!("finite-difference step must be positive, got {h}"))),
        None => FdConfig::for_scene(cs.bbox_diagonal()),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points = random_points(&mut rng, cs, samples, false);
    let mut ok = true;

    let ratio = divergence_ratio(&sol, &points, &cfg, cs.dimension() == 2)?;
    ok &= ratio <= 1.0;
    println!(
        "divergence  {}  max |div| / ({DIVERGENCE_TOL:e} (|J| + 1e-12)) = {ratio:.3e} over {} points (h = {:.3e})",
        verdict(ratio <= 1.0),
        points.len(),
        cfg.h
    );

    if cs.dimension() == 3 {
        let err = curl_error(&sol, &points, &cfg)?;
        ok &= err <= CURL_TOL;
        println!(
            "curl        {}  max |omega - curl/2| / |curl/2| = {err:.3e} over {} points",
            verdict(err <= CURL_TOL),
            points.len()
        );
        let planar = cs.vertices().all(|v| v.position.z == 0.0 && v.velocity.z == 0.0);
        if planar {
            let plane = random_points(&mut rng, cs, samples, true);
            let ratio = divergence_ratio(&sol, &plane, &cfg, true)?;
            let pass = ratio <= 1.0;
            ok &= pass;
            println!(
                "in-plane    {}  planar scene solved in 3D: 2D divergence in z = 0 is {ratio:.3e} of the bound{}",
                verdict(pass),
                if pass { "" } else { " (the slice is not incompressible; solve it as 2D)" }
            );
        }
    }

    let residual = sol.relative_residual();
    let pass = residual <= RESIDUAL_TOL;
    ok &= pass;
    println!("residual    {}  solver relative residual {residual:.3e} (limit {RESIDUAL_TOL:e})", verdict(pass));
    print_profile(&residual_profile(&sol));

    if ok {
        Ok(())
    } else {
        Err(Failure::Check)
    }
}

fn cmd_baseline(spec: &Path, method: Method, as_json: bool) -> Result<(), Failure> {
    let (_, cs) = load_spec(spec)?;
    let sol = solve_with(&cs, method).map_err(|e| Failure::Input(e.class(), e.to_string()))?;
    let p = residual_profile(&sol);
    if as_json {
        let report = json!({
            "method": method,
            "vertices": cs.vertex_count(),
            "rms": p.rms,
            "max": p.max,
            "vertex_rms": p.rms_at(SampleKind::Vertex),
            "midpoint_rms": p.rms_at(SampleKind::Midpoint),
            "relative_residual": sol.relative_residual(),
        });
        println!("{report}");
    } else {
        println!("method      {}", method.name());
        println!("vertices    {}", cs.vertex_count());
        print_profile(&p);
    }
    Ok(())
}

fn cmd_serve(host: IpAddr, port: u16) -> Result<(), Failure> {
    let addr = SocketAddr::new(host, port);
    let runtime = tokio::runtime::Runtime::new()?;
    eprintln!("listening on http://{addr}");
    runtime.block_on(curveflow_service::serve(addr))?;
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Solve { spec, mode, out } => cmd_solve(&spec, mode, out.as_deref()),
        Command::Eval {
            solution,
            points,
            out,
            angular,
        } => cmd_eval(&solution, &points, out.as_deref(), angular),
        Command::Grid {
            solution,
            min,
            max,
            res,
            out,
            angular,
        } => cmd_grid(&solution, GridSpec::new(min, max, res), out.as_deref(), angular),
        Command::Validate {
            solution,
            samples,
            fd_step,
            seed,
        } => cmd_validate(&solution, samples, fd_step, seed),
        Command::Baseline { spec, method, json } => cmd_baseline(&spec, method, json),
        Command::Serve { port, host } => cmd_serve(host, port),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Check) => ExitCode::from(1),
        Err(Failure::Input(class, message)) => {
            eprintln!("error ({}): {message}", class.code());
            ExitCode::from(class.exit_code())
        }
    }
}
