use std::fs;
use std::path::Path;

use conewton::problems::lowrank::{build_lowrank, solve_completion};
use conewton::problems::{build_circular, generate_circular, generate_completion, starting_point, StartKind};
use conewton::{solve_with_clock, KktCertificate, ResidualSystem, SolveReport, SolverConfig, Status};
use serde::Serialize;

use crate::args::{parse_angle, Command, GenerateArgs, GenerateKind, LandscapeArgs, ReplayArgs, SolveArgs};
use crate::batch::{self, effective_jobs, SolverSnapshot, Stopwatch};
use crate::instance::{self, Instance};
use crate::landscape::{self, Multiplier};
use crate::report::{self, BatchSpec, Manifest};

pub const EXIT_USAGE: u8 = 64;
pub const EXIT_DATA: u8 = 65;
pub const EXIT_IO: u8 = 74;

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    fn usage(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }

    fn io(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_IO,
            message: message.into(),
        }
    }
}

/// Exit code of `solve`: 0 solved, 2 strongly stationary, 3 otherwise.
pub fn status_code(status: Status) -> u8 {
    match status {
        Status::Solved => 0,
        Status::StronglyStationary => 2,
        _ => 3,
    }
}

pub fn run(command: Command) -> Result<u8, CliError> {
    match command {
        Command::Circular(args) => {
            let jobs = effective_jobs(args.output.jobs);
            let rows = batch::run_circular(&args, jobs).map_err(CliError::usage)?;
            report::write_circular(&args.output.out, &args, args.output.format, &rows, jobs).map_err(CliError::io)?;
            let solved = rows.iter().filter(|r| r.solved()).count();
            println!("circular: {solved}/{} solved -> {}", rows.len(), args.output.out.display());
            Ok(0)
        }
        Command::Lowrank(args) => {
            let jobs = effective_jobs(args.output.jobs);
            let rows = batch::run_lowrank(&args, jobs).map_err(CliError::usage)?;
            report::write_lowrank(&args.output.out, &args, args.output.format, &rows, jobs).map_err(CliError::io)?;
            let solved = rows.iter().filter(|r| r.solved()).count();
            println!(
                "lowrank: {solved}/{} solved ({:.1}%) -> {}",
                rows.len(),
                100.0 * solved as f64 / rows.len().max(1) as f64,
                args.output.out.display()
            );
            Ok(0)
        }
        Command::Landscape(args) => cmd_landscape(&args),
        Command::Solve(args) => cmd_solve(&args),
        Command::Generate(args) => cmd_generate(&args),
        Command::Replay(args) => cmd_replay(&args),
    }
}

fn cmd_landscape(args: &LandscapeArgs) -> Result<u8, CliError> {
    if args.n != 2 {
        return Err(CliError::usage(format!("landscape needs n = 2, got n = {}", args.n)));
    }
    let multiplier: Multiplier = args.multiplier.parse().map_err(CliError::usage)?;
    let window = match &args.window {
        Some(w) => {
            let v: Vec<f64> = crate::args::parse_list(w, "window bound").map_err(CliError::usage)?;
            let arr: [f64; 4] = v.try_into().map_err(|_| CliError::usage("window needs four values"))?;
            Some(arr)
        }
        None => None,
    };
    let l = landscape::compute(args.seed, multiplier, window, args.points).map_err(CliError::usage)?;
    fs::create_dir_all(&args.out).map_err(|e| CliError::io(e.to_string()))?;
    let text = landscape::to_csv(&l).map_err(CliError::io)?;
    fs::write(args.out.join("grid.csv"), text).map_err(|e| CliError::io(e.to_string()))?;
    println!("landscape: sigma = {:e} -> {}", l.sigma, args.out.join("grid.csv").display());
    Ok(0)
}

#[derive(Serialize)]
struct Certificate {
    stationarity: f64,
    primal_infeasibility: f64,
    dual_infeasibility: f64,
    complementarity: f64,
}

impl From<&KktCertificate> for Certificate {
    fn from(c: &KktCertificate) -> Self {
        Certificate {
            stationarity: c.stationarity,
            primal_infeasibility: c.primal_infeasibility,
            dual_infeasibility: c.dual_infeasibility,
            complementarity: c.complementarity,
        }
    }
}

#[derive(Serialize)]
struct SolveManifest<'a> {
    command: &'static str,
    instance: String,
    kind: &'static str,
    start: String,
    config: SolverSnapshot,
    status: &'a str,
    residual: f64,
    iterations: usize,
    wall_time: f64,
    certificate: Certificate,
    environment: report::Environment,
}

fn cmd_solve(args: &SolveArgs) -> Result<u8, CliError> {
    let text = fs::read_to_string(&args.instance).map_err(|e| CliError::io(format!("{}: {e}", args.instance.display())))?;
    let inst = instance::parse(&text).map_err(|e| CliError {
        code: if e.is_header() { EXIT_USAGE } else { EXIT_DATA },
        message: format!("{}: {e}", args.instance.display()),
    })?;
    let start = args.start.as_deref().map(|s| s.parse::<StartKind>()).transpose().map_err(|e| CliError::usage(e.to_string()))?;
    let clock = Stopwatch::start();
    let fail = |e: conewton::Error| CliError::usage(e.to_string());
    let (report, cfg, start_label): (SolveReport, SolverConfig, String) = match &inst {
        Instance::Circular(c) => {
            let cfg = batch::circular_config(&args.solver);
            cfg.validate().map_err(fail)?;
            let p = build_circular(c).map_err(fail)?;
            let kind = start.unwrap_or(StartKind::Sp0);
            let (y0, s0) = starting_point(p.primal_dim(), p.dual_dim(), kind, true, args.seed).map_err(fail)?;
            (solve_with_clock(&p, y0, s0, &cfg, &clock).map_err(fail)?, cfg, kind.to_string())
        }
        Instance::Lowrank(l) => {
            let cfg = batch::lowrank_config(&args.solver);
            cfg.validate().map_err(fail)?;
            match start {
                Some(kind) => {
                    let p = build_lowrank(l).map_err(fail)?;
                    let (x0, l0) = starting_point(p.primal_dim(), p.dual_dim(), kind, false, args.seed).map_err(fail)?;
                    (solve_with_clock(&p, x0, l0, &cfg, &clock).map_err(fail)?, cfg, kind.to_string())
                }
                None => {
                    let o = solve_completion(l, &cfg, args.perturbations, &clock).map_err(fail)?;
                    let label = o.strategy.to_string();
                    (o.report, cfg, label)
                }
            }
        }
    };
    let c = &report.certificate;
    println!("status       {}", report.status);
    println!("residual     {:e}", report.residual());
    println!("iterations   {}", report.iterations);
    println!("start        {start_label}");
    println!("stationarity {:e}", c.stationarity);
    println!("primal_inf   {:e}", c.primal_infeasibility);
    println!("dual_inf     {:e}", c.dual_infeasibility);
    println!("complement   {:e}", c.complementarity);
    if let Some(dir) = &args.out {
        fs::create_dir_all(dir).map_err(|e| CliError::io(e.to_string()))?;
        let m = SolveManifest {
            command: "solve",
            instance: args.instance.display().to_string(),
            kind: inst.kind(),
            start: start_label,
            config: SolverSnapshot::from(&cfg),
            status: report.status.as_str(),
            residual: report.residual(),
            iterations: report.iterations,
            wall_time: report.wall_time,
            certificate: Certificate::from(c),
            environment: report::Environment::current(1),
        };
        let text = serde_json::to_string_pretty(&m).map_err(|e| CliError::io(e.to_string()))?;
        fs::write(dir.join("manifest.json"), text + "\n").map_err(|e| CliError::io(e.to_string()))?;
    }
    Ok(status_code(report.status))
}

fn cmd_generate(args: &GenerateArgs) -> Result<u8, CliError> {
    let inst = match &args.kind {
        GenerateKind::Circular { n, m, omega, seed } => {
            let omega = parse_angle(omega).map_err(CliError::usage)?;
            let m = m.unwrap_or(((*n as f64) / 4.0).round() as usize);
            Instance::Circular(generate_circular(*n, m, omega, *seed).map_err(|e| CliError::usage(e.to_string()))?)
        }
        GenerateKind::Lowrank { n, p, rank, seed } => {
            Instance::Lowrank(generate_completion(*n, *p, *rank, *seed).map_err(|e| CliError::usage(e.to_string()))?)
        }
    };
    let text = instance::write(&inst);
    match &args.out {
        Some(path) => fs::write(path, text).map_err(|e| CliError::io(format!("{}: {e}", path.display())))?,
        None => print!("{text}"),
    }
    Ok(0)
}

/// Re-runs the batch recorded in `manifest` into `out`.
pub fn replay(manifest: &Manifest, out: &Path, jobs: usize) -> Result<(), String> {
    let jobs = effective_jobs(jobs);
    match &manifest.spec {
        BatchSpec::Circular(a) => {
            let rows = batch::run_circular(a, jobs)?;
            report::write_circular(out, a, manifest.format, &rows, jobs)
        }
        BatchSpec::Lowrank(a) => {
            let rows = batch::run_lowrank(a, jobs)?;
            report::write_lowrank(out, a, manifest.format, &rows, jobs)
        }
    }
}

fn cmd_replay(args: &ReplayArgs) -> Result<u8, CliError> {
    let m = Manifest::load(&args.manifest).map_err(CliError::usage)?;
    replay(&m, &args.out, args.jobs).map_err(CliError::io)?;
    println!("replay -> {}", args.out.display());
    Ok(0)
}
