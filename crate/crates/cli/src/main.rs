mod config;

use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use conical::cqe::{initial_guess, solve_keyed, CqeConfig};
use conical::diabatic::{geometric_phase, LoopSpec};
use conical::fci::FciPoint;
use conical::mex::{optimize, MexConfig};
use conical::simulator::{Exponential, NoiseModel};
use conical::solver::{readout_key, PointSolver};
use conical::surfaces::{detect_ci, detect_ci_grid, scan, to_csv, ScanMode, ScanSpec};
use conical::{Coordinate, Error, Geometry};

use config::{Effective, FileConfig};

const EXIT_CONFIG: u8 = 1;
const EXIT_PARTIAL: u8 = 2;

#[derive(Parser, Debug)]
#[command(name = "conical", version, about = "H3+ potential surfaces, crossing searches and geometric-phase loops")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Scan a potential-energy curve or grid and write CSV.
    Pes(PesArgs),
    /// Search for the minimum-energy crossing of E1 and E2.
    Mex(MexArgs),
    /// Accumulate the geometric phase around a loop of the third atom.
    Phase(PhaseArgs),
    /// Energies at a single geometry.
    Solve(SolveArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum SolverChoice {
    Fci,
    Cqe,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Mode {
    D3h,
    C2v,
    Angle,
    Xy,
}

#[derive(Args, Debug, Default)]
struct Common {
    /// Energy solver [fci, cqe].
    #[arg(long, value_enum)]
    solver: Option<SolverChoice>,
    /// Depolarizing rate in [0, 1] for the cqe solver.
    #[arg(long)]
    noise: Option<f64>,
    /// Standard deviation of the readout bias in hartree.
    #[arg(long)]
    readout: Option<f64>,
    /// Seed for the readout bias.
    #[arg(long)]
    seed: Option<u64>,
    /// Product-formula steps for the exponential, or "exact".
    #[arg(long)]
    trotter: Option<String>,
    /// Step size of the cqe solver.
    #[arg(long)]
    eta: Option<f64>,
    /// Iteration cap of the cqe solver.
    #[arg(long)]
    cqe_max_iter: Option<usize>,
    /// Output file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// TOML settings file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct PesArgs {
    /// Scan family [d3h, c2v, angle, xy].
    #[arg(long, value_enum)]
    mode: Option<Mode>,
    /// Half-distance of the fixed pair in bohr (c2v, angle, xy).
    #[arg(long)]
    r: Option<f64>,
    /// Smallest R in bohr (d3h).
    #[arg(long)]
    r_min: Option<f64>,
    /// Largest R in bohr (d3h).
    #[arg(long)]
    r_max: Option<f64>,
    /// Number of points along a curve.
    #[arg(long)]
    steps: Option<usize>,
    /// Distance of the third atom in bohr (angle).
    #[arg(long)]
    rho: Option<f64>,
    /// Smallest rho in bohr (c2v).
    #[arg(long)]
    rho_min: Option<f64>,
    /// Largest rho in bohr (c2v).
    #[arg(long)]
    rho_max: Option<f64>,
    /// Smallest theta in degrees (angle).
    #[arg(long)]
    theta_min: Option<f64>,
    /// Largest theta in degrees (angle).
    #[arg(long)]
    theta_max: Option<f64>,
    /// Grid x range start in bohr (xy).
    #[arg(long)]
    x_min: Option<f64>,
    /// Grid x range end in bohr (xy).
    #[arg(long)]
    x_max: Option<f64>,
    /// Grid points along x (xy).
    #[arg(long)]
    nx: Option<usize>,
    /// Grid y range start in bohr (xy).
    #[arg(long)]
    y_min: Option<f64>,
    /// Grid y range end in bohr (xy).
    #[arg(long)]
    y_max: Option<f64>,
    /// Grid points along y (xy).
    #[arg(long)]
    ny: Option<usize>,
    /// Gap below which a refined minimum counts as a crossing, in hartree.
    #[arg(long)]
    gap_tol: Option<f64>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct MexArgs {
    /// Half-distance of the fixed pair in bohr.
    #[arg(long)]
    r: Option<f64>,
    /// Starting rho in bohr.
    #[arg(long)]
    rho: Option<f64>,
    /// Starting theta in degrees.
    #[arg(long)]
    theta: Option<f64>,
    /// Comma-separated free coordinates from {R, rho, theta}.
    #[arg(long, value_delimiter = ',')]
    free: Option<Vec<String>>,
    /// Penalty weight on the gap.
    #[arg(long)]
    lambda0: Option<f64>,
    /// Descent step size.
    #[arg(long)]
    step: Option<f64>,
    /// Central-difference displacement (bohr or radian).
    #[arg(long)]
    fd_step: Option<f64>,
    /// Iteration cap.
    #[arg(long)]
    max_iter: Option<usize>,
    /// Stop when the gap falls below this, in hartree.
    #[arg(long)]
    gap_tol: Option<f64>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct PhaseArgs {
    /// Half-distance of the fixed pair in bohr.
    #[arg(long)]
    r: Option<f64>,
    /// Loop centre x in bohr.
    #[arg(long)]
    cx: Option<f64>,
    /// Loop centre y in bohr; defaults to the equilateral point.
    #[arg(long)]
    cy: Option<f64>,
    /// Loop radius in bohr.
    #[arg(long)]
    radius: Option<f64>,
    /// Points on the loop (at least 16).
    #[arg(long)]
    points: Option<usize>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct SolveArgs {
    /// Half-distance of the fixed pair in bohr.
    #[arg(long)]
    r: Option<f64>,
    /// Distance of the third atom in bohr.
    #[arg(long)]
    rho: Option<f64>,
    /// Angle of the third atom in degrees.
    #[arg(long)]
    theta: Option<f64>,
    /// Write the 8x8 register Hamiltonian to this file.
    #[arg(long)]
    dump_h8: Option<PathBuf>,
    /// Write cqe iteration traces to <PATH>.e1.csv and <PATH>.e2.csv.
    #[arg(long)]
    trace: Option<PathBuf>,
    #[command(flatten)]
    common: Common,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_CONFIG) } else { ExitCode::SUCCESS };
        }
    };
    let outcome = match cli.command {
        Command::Pes(a) => cmd_pes(a),
        Command::Mex(a) => cmd_mex(a),
        Command::Phase(a) => cmd_phase(a),
        Command::Solve(a) => cmd_solve(a),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            if matches!(e, Error::InvalidConfig(_) | Error::Parse(_)) {
                eprintln!("run with --help for usage");
            }
            ExitCode::from(EXIT_CONFIG)
        }
    }
}

/// Solver settings shared by every subcommand.
struct SolverSetup {
    solver: PointSolver<f64>,
    noise: Option<NoiseModel<f64>>,
    config: CqeConfig<f64>,
    out: Option<PathBuf>,
}

fn setup(common: &Common, file: &FileConfig, eff: &mut Effective) -> Result<SolverSetup, Error> {
    let choice = match (common.solver, file.solver.as_deref()) {
        (Some(c), _) => c,
        (None, Some(s)) => {
            SolverChoice::from_str(s, true).map_err(|_| Error::InvalidConfig(format!("unknown solver {s:?}")))?
        }
        (None, None) => SolverChoice::Fci,
    };
    eff.note(format!("solver = {}", if choice == SolverChoice::Fci { "fci" } else { "cqe" }));
    let noise = eff.pick("noise", common.noise, file.noise, 0.0);
    let readout = eff.pick("readout", common.readout, file.readout, 0.0);
    let seed = eff.pick("seed", common.seed, file.seed, 0);
    let trotter: Exponential =
        eff.pick("trotter", common.trotter.clone(), file.trotter.clone(), "exact".into()).parse()?;
    let defaults = CqeConfig::<f64>::default();
    let eta = eff.pick("eta", common.eta, file.eta, defaults.step_size);
    let max_iter = eff.pick("cqe_max_iter", common.cqe_max_iter, file.cqe_max_iter, defaults.max_iterations);
    let config = CqeConfig { step_size: eta, max_iterations: max_iter, exponential: trotter, ..defaults };
    config.validate()?;
    let model = NoiseModel::new(noise, readout, seed)?;
    let noise = (noise > 0.0 || readout > 0.0).then_some(model);
    if choice == SolverChoice::Fci && noise.is_some() {
        return Err(Error::InvalidConfig("noise applies to the cqe solver only".into()));
    }
    let solver = match choice {
        SolverChoice::Fci => PointSolver::Fci,
        SolverChoice::Cqe => PointSolver::Cqe { config, noise },
    };
    let out = common.out.clone().or_else(|| file.out.clone().map(PathBuf::from));
    Ok(SolverSetup { solver, noise, config, out })
}

fn header_comments(command: &str, eff: &Effective) -> Vec<String> {
    let mut lines = vec![format!("conical {} {}", command, env!("CARGO_PKG_VERSION"))];
    lines.extend(eff.lines.iter().cloned());
    lines
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), Error> {
    match out {
        Some(p) => {
            std::fs::write(p, text).map_err(|e| Error::InvalidConfig(format!("cannot write {}: {e}", p.display())))
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes()).map_err(|e| Error::InvalidConfig(e.to_string()))
        }
    }
}

fn with_comments(comments: &[String], body: &str) -> String {
    let mut s: String = comments.iter().map(|c| format!("# {c}\n")).collect();
    s.push_str(body);
    s
}

fn cmd_pes(a: PesArgs) -> Result<u8, Error> {
    let file = FileConfig::load(a.common.config.as_deref())?;
    let mut eff = Effective::default();
    let mode = match (a.mode, file.mode.as_deref()) {
        (Some(m), _) => m,
        (None, Some(s)) => Mode::from_str(s, true).map_err(|_| Error::InvalidConfig(format!("unknown mode {s:?}")))?,
        (None, None) => return Err(Error::InvalidConfig("missing required setting --mode".into())),
    };
    let su = setup(&a.common, &file, &mut eff)?;
    let gap_tol = eff.pick("gap_tol", a.gap_tol, file.gap_tol, 1e-3);
    let deg = f64::to_radians;
    let scan_mode = match mode {
        Mode::D3h => {
            eff.note("mode = d3h");
            ScanMode::D3hCurve {
                r_min: eff.pick("r_min", a.r_min, file.r_min, 0.5),
                r_max: eff.pick("r_max", a.r_max, file.r_max, 3.0),
                steps: eff.pick("steps", a.steps, file.steps, 50),
            }
        }
        Mode::C2v => {
            eff.note("mode = c2v");
            ScanMode::C2vCurve {
                r: eff.pick("r", a.r, file.r, 1.0),
                rho_min: eff.pick("rho_min", a.rho_min, file.rho_min, 1.0),
                rho_max: eff.pick("rho_max", a.rho_max, file.rho_max, 3.0),
                steps: eff.pick("steps", a.steps, file.steps, 50),
            }
        }
        Mode::Angle => {
            eff.note("mode = angle");
            let r = eff.pick("r", a.r, file.r, 1.0);
            ScanMode::AngleCurve {
                r,
                rho: eff.pick("rho", a.rho, file.rho, 3f64.sqrt() * r),
                theta_min: deg(eff.pick("theta_min", a.theta_min, file.theta_min, 60.0)),
                theta_max: deg(eff.pick("theta_max", a.theta_max, file.theta_max, 120.0)),
                steps: eff.pick("steps", a.steps, file.steps, 61),
            }
        }
        Mode::Xy => {
            eff.note("mode = xy");
            ScanMode::XyGrid {
                r: eff.pick("r", a.r, file.r, 1.0),
                x_min: eff.pick("x_min", a.x_min, file.x_min, -1.5),
                x_max: eff.pick("x_max", a.x_max, file.x_max, 1.5),
                nx: eff.pick("nx", a.nx, file.nx, 31),
                y_min: eff.pick("y_min", a.y_min, file.y_min, 0.5),
                y_max: eff.pick("y_max", a.y_max, file.y_max, 3.0),
                ny: eff.pick("ny", a.ny, file.ny, 26),
            }
        }
    };
    eff.note("units = bohr, degrees, hartree");
    let records = scan(&ScanSpec { mode: scan_mode, solver: su.solver })?;
    let cis = match scan_mode {
        ScanMode::XyGrid { nx, ny, .. } => detect_ci_grid(&records, nx, ny, gap_tol),
        _ => detect_ci(&records, gap_tol),
    };
    for c in cis.iter().take(10) {
        eprintln!("crossing: R={:.6} rho={:.6} theta={:.4} deg gap={:.3e}", c.r, c.rho, c.theta.to_degrees(), c.gap);
    }
    if cis.len() > 10 {
        eprintln!("crossing: {} more points", cis.len() - 10);
    }
    emit(su.out.as_deref(), &to_csv(&records, &header_comments("pes", &eff)))?;
    let partial = records.iter().any(|r| r.failed() || !r.converged);
    Ok(if partial { EXIT_PARTIAL } else { 0 })
}

fn parse_free(names: &[String]) -> Result<Vec<Coordinate>, Error> {
    names.iter().map(|s| s.trim().parse()).collect()
}

fn cmd_mex(a: MexArgs) -> Result<u8, Error> {
    let file = FileConfig::load(a.common.config.as_deref())?;
    let mut eff = Effective::default();
    let su = setup(&a.common, &file, &mut eff)?;
    let r = eff.pick("r", a.r, file.r, 1.0);
    let rho = eff.pick("rho", a.rho, file.rho, 2.897);
    let theta = eff.pick("theta", a.theta, file.theta, 57.819);
    let free_names = a.free.or(file.free).unwrap_or_else(|| vec!["rho".into(), "theta".into()]);
    eff.note(format!("free = {}", free_names.join(",")));
    let defaults = MexConfig::<f64>::default();
    let cfg = MexConfig {
        free: parse_free(&free_names)?,
        lambda0: eff.pick("lambda0", a.lambda0, file.lambda0, defaults.lambda0),
        step_size: eff.pick("step", a.step, file.step, defaults.step_size),
        fd_step: eff.pick("fd_step", a.fd_step, file.fd_step, defaults.fd_step),
        max_iterations: eff.pick("max_iter", a.max_iter, file.max_iter, defaults.max_iterations),
        gap_tol: eff.pick("gap_tol", a.gap_tol, file.gap_tol, defaults.gap_tol),
        ..defaults
    };
    let start = Geometry::new(r, rho, theta.to_radians())?;
    let trace = optimize(&start, &cfg, &su.solver).map_err(|e| match e {
        Error::SolverFailure { .. } | Error::InvalidConfig(_) => e,
        other => Error::InvalidConfig(other.to_string()),
    })?;
    print!("{}", trace.table());
    let last = trace.last();
    println!(
        "final: theta={:.4} deg rho={:.5} bohr gap={:.3e} hartree converged={}",
        last.geometry.theta_degrees(),
        last.geometry.rho(),
        last.gap,
        trace.converged
    );
    if let Some(out) = su.out.as_deref() {
        emit(Some(out), &with_comments(&header_comments("mex", &eff), &trace.csv()))?;
    }
    Ok(if trace.converged { 0 } else { EXIT_PARTIAL })
}

fn cmd_phase(a: PhaseArgs) -> Result<u8, Error> {
    let file = FileConfig::load(a.common.config.as_deref())?;
    let mut eff = Effective::default();
    let su = setup(&a.common, &file, &mut eff)?;
    if su.solver != PointSolver::Fci {
        return Err(Error::InvalidConfig("phase loops use fci wavefunctions; drop --solver cqe".into()));
    }
    let r = eff.pick("r", a.r, file.r, 1.0);
    let spec = LoopSpec::around(
        r,
        eff.pick("cx", a.cx, file.cx, 0.0),
        eff.pick("cy", a.cy, file.cy, 3f64.sqrt() * r),
        eff.pick("radius", a.radius, file.radius, 0.3),
        eff.pick("points", a.points, file.points, 64),
    );
    spec.validate()?;
    let res = geometric_phase(&spec)?;
    let verdict = if res.encloses_ci() { "encloses CI" } else { "no CI enclosed" };
    println!("phase = {:.6} rad ({verdict})", res.phase);
    if let Some(out) = su.out.as_deref() {
        emit(Some(out), &with_comments(&header_comments("phase", &eff), &res.csv()))?;
    }
    Ok(0)
}

fn cmd_solve(a: SolveArgs) -> Result<u8, Error> {
    let file = FileConfig::load(a.common.config.as_deref())?;
    let mut eff = Effective::default();
    let su = setup(&a.common, &file, &mut eff)?;
    let r = eff.require("r", a.r, file.r)?;
    let rho = eff.require("rho", a.rho, file.rho)?;
    let theta = eff.require("theta", a.theta, file.theta)?;
    let g = Geometry::new(r, rho, theta.to_radians())?;
    let point = FciPoint::compute(&g)?;
    if let Some(p) = &a.dump_h8 {
        emit(Some(p), &point.hamiltonian.dump_h8())?;
    }
    let mut report = header_comments("solve", &eff).iter().map(|c| format!("# {c}\n")).collect::<String>();
    report.push_str(&format!("symmetry = {}\n", g.classify_symmetry(1e-8)));
    report.push_str(&format!("e_nuc = {:.16e}\ne_hf = {:.16e}\n", point.integrals.e_nuc, point.scf.energy));
    let [e0, e1, e2] = point.energies();
    let mut energies = [e0, e1, e2];
    let mut converged = true;
    if let PointSolver::Cqe { .. } = su.solver {
        for target in [1, 2] {
            let guess = initial_guess(&point.hamiltonian, target)?;
            let res = solve_keyed(&guess, &point.hamiltonian, &su.config, su.noise.as_ref(), readout_key(&g, target))?;
            converged &= res.converged;
            energies[target] = res.energy;
            report.push_str(&format!(
                "cqe_e{target}: iterations = {} variance = {:.3e} converged = {}\n",
                res.iterations, res.variance, res.converged
            ));
            if let Some(prefix) = &a.trace {
                let path = PathBuf::from(format!("{}.e{target}.csv", prefix.display()));
                emit(Some(&path), &res.trace_csv())?;
            }
        }
    }
    report.push_str(&format!("fci_E0 = {e0:.16e}\nfci_E1 = {e1:.16e}\nfci_E2 = {e2:.16e}\n"));
    report.push_str(&format!(
        "E0 = {:.16e}\nE1 = {:.16e}\nE2 = {:.16e}\ngap = {:.16e}\n",
        energies[0],
        energies[1],
        energies[2],
        energies[2] - energies[1]
    ));
    emit(su.out.as_deref(), &report)?;
    Ok(if converged { 0 } else { EXIT_PARTIAL })
}
