//! Batch runners behind the `circular` and `lowrank` subcommands.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use conewton::problems::lowrank::{build_lowrank, generate_completion, recovery_error, solve_completion};
use conewton::problems::{build_circular, generate_circular, starting_point, StartKind};
use conewton::{Clock, ReducedProblem, SmoothModel, SolveReport, SolverConfig, Status, StepKind};
use serde::{Deserialize, Serialize};

use crate::args::{parse_angle, parse_list, CircularArgs, LowrankArgs};

/// Perturbed restarts after a failed rank-one start.
pub const LOWRANK_PERTURBATIONS: u32 = 3;
/// Iteration cap of each low-rank attempt.
pub const LOWRANK_MAXITER: usize = 300;
/// Progress threshold of the low-rank stopping rule.
pub const LOWRANK_PROGRESS_EPS: f64 = 1e-8;

pub struct Stopwatch(Instant);

impl Stopwatch {
    pub fn start() -> Self {
        Stopwatch(Instant::now())
    }
}

impl Clock for Stopwatch {
    fn now(&self) -> f64 {
        self.0.elapsed().as_secs_f64()
    }
}

/// Effective job count: the request, capped by `CONEWTON_THREADS`.
pub fn effective_jobs(requested: usize) -> usize {
    let cap = std::env::var("CONEWTON_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|v| *v > 0);
    let jobs = requested.max(1);
    match cap {
        Some(c) => jobs.min(c),
        None => jobs,
    }
}

/// Maps `f` over `items` on `jobs` threads; output order follows input order.
pub fn run_parallel<T: Sync, R: Send>(items: &[T], jobs: usize, f: impl Fn(&T) -> R + Sync) -> Vec<R> {
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<R>>> = Mutex::new((0..items.len()).map(|_| None).collect());
    std::thread::scope(|s| {
        for _ in 0..jobs.max(1).min(items.len().max(1)) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= items.len() {
                    break;
                }
                let r = f(&items[i]);
                slots.lock().unwrap()[i] = Some(r);
            });
        }
    });
    slots.into_inner().unwrap().into_iter().map(|r| r.unwrap()).collect()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepCounts {
    pub newton: usize,
    pub regularized: usize,
    pub feas_escape: usize,
}

impl StepCounts {
    pub fn of(report: &SolveReport) -> Self {
        let mut c = StepCounts::default();
        for e in &report.trace {
            match e.step_kind {
                StepKind::Newton => c.newton += 1,
                StepKind::Regularized => c.regularized += 1,
                StepKind::FeasEscape => c.feas_escape += 1,
            }
        }
        c
    }

    fn add(&mut self, o: StepCounts) {
        self.newton += o.newton;
        self.regularized += o.regularized;
        self.feas_escape += o.feas_escape;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverSnapshot {
    pub c: f64,
    pub tol: f64,
    pub dtol: f64,
    pub maxiter: usize,
    pub maxiter_ls: usize,
    pub singular_pivot_rel: f64,
    pub newton_residual_rel: f64,
    pub stationary_eps: f64,
    pub progress_eps: Option<f64>,
    pub time_limit: Option<f64>,
}

impl From<&SolverConfig> for SolverSnapshot {
    fn from(c: &SolverConfig) -> Self {
        SolverSnapshot {
            c: c.c,
            tol: c.tol,
            dtol: c.dtol,
            maxiter: c.maxiter,
            maxiter_ls: c.maxiter_ls,
            singular_pivot_rel: c.singular_pivot_rel,
            newton_residual_rel: c.newton_residual_rel,
            stationary_eps: c.stationary_eps,
            progress_eps: c.progress_eps,
            time_limit: c.time_limit,
        }
    }
}

/// KKT quantities of a solved run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KktCheck {
    /// Largest certificate entry at the recovered point.
    pub certificate: f64,
    /// `‖H‖` after re-embedding the recovered multiplier.
    pub embedded_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CircularRow {
    pub seed: u64,
    pub omega_label: String,
    pub omega: f64,
    pub start: String,
    pub status: String,
    pub residual: f64,
    pub iters: usize,
    pub seconds: f64,
    pub steps: StepCounts,
    /// `‖H‖` before each step followed by the final residual.
    pub history: Vec<f64>,
    pub kkt: Option<KktCheck>,
}

impl CircularRow {
    pub fn solved(&self) -> bool {
        self.status == Status::Solved.as_str()
    }
}

pub fn circular_config(flags: &crate::args::SolverFlags) -> SolverConfig {
    flags.apply(SolverConfig::default())
}

pub fn circular_m(args: &CircularArgs) -> usize {
    args.m.unwrap_or(((args.n as f64) / 4.0).round() as usize)
}

pub fn residual_history(report: &SolveReport) -> Vec<f64> {
    let mut h: Vec<f64> = report.trace.iter().map(|e| e.residual).collect();
    h.push(report.residual());
    h
}

fn kkt_check<M: SmoothModel>(p: &ReducedProblem<M>, report: &SolveReport) -> Result<KktCheck, String> {
    use conewton::ResidualSystem;
    let kkt = p.recover_kkt(&report.iterate.x, &report.iterate.lambda).map_err(|e| e.to_string())?;
    let lambda = p.embed_multiplier(&kkt).map_err(|e| e.to_string())?;
    let it = p.lift().evaluate(kkt.x.clone(), lambda).map_err(|e| e.to_string())?;
    Ok(KktCheck {
        certificate: kkt.certificate.worst(),
        embedded_residual: it.residual_norm(),
    })
}

pub fn run_circular(args: &CircularArgs, jobs: usize) -> Result<Vec<CircularRow>, String> {
    let labels: Vec<String> = args.omegas.split(',').map(|s| s.trim().to_string()).collect();
    let omegas = labels.iter().map(|s| parse_angle(s)).collect::<Result<Vec<f64>, String>>()?;
    let start: StartKind = args.start.parse().map_err(|e: conewton::Error| e.to_string())?;
    let cfg = circular_config(&args.solver);
    cfg.validate().map_err(|e| e.to_string())?;
    let m = circular_m(args);
    let mut jobs_list = Vec::new();
    for (label, &omega) in labels.iter().zip(&omegas) {
        for k in 0..args.seeds {
            jobs_list.push((label.clone(), omega, args.seed_base + k));
        }
    }
    let results = run_parallel(&jobs_list, jobs, |(label, omega, seed)| -> Result<CircularRow, String> {
        let inst = generate_circular(args.n, m, *omega, *seed).map_err(|e| e.to_string())?;
        let p = build_circular(&inst).map_err(|e| e.to_string())?;
        let (y0, s0) = starting_point(args.n, m, start, true, *seed).map_err(|e| e.to_string())?;
        let clock = Stopwatch::start();
        let report = conewton::solve_with_clock(&p, y0, s0, &cfg, &clock).map_err(|e| e.to_string())?;
        let kkt = if report.status == Status::Solved {
            Some(kkt_check(&p, &report)?)
        } else {
            None
        };
        Ok(CircularRow {
            seed: *seed,
            omega_label: label.clone(),
            omega: *omega,
            start: start.as_str().to_string(),
            status: report.status.as_str().to_string(),
            residual: report.residual(),
            iters: report.iterations,
            seconds: report.wall_time,
            steps: StepCounts::of(&report),
            history: residual_history(&report),
            kkt,
        })
    });
    results.into_iter().collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LowrankRow {
    pub p: f64,
    pub rank: usize,
    pub seed: u64,
    pub status: String,
    pub residual: f64,
    /// Iterations of the reported attempt.
    pub iters: usize,
    /// Iterations summed over every attempt.
    pub total_iters: usize,
    pub strategy: String,
    pub attempts: usize,
    pub objective: f64,
    pub recovery_error: f64,
    pub seconds: f64,
    pub steps: StepCounts,
    pub kkt: Option<KktCheck>,
}

impl LowrankRow {
    pub fn solved(&self) -> bool {
        self.status == Status::Solved.as_str()
    }
}

pub fn lowrank_config(flags: &crate::args::SolverFlags) -> SolverConfig {
    let base = SolverConfig {
        maxiter: LOWRANK_MAXITER,
        progress_eps: Some(LOWRANK_PROGRESS_EPS),
        ..SolverConfig::default()
    };
    flags.apply(base)
}

pub fn solve_lowrank_instance(
    inst: &conewton::problems::CompletionInstance,
    cfg: &SolverConfig,
    perturbations: u32,
) -> Result<LowrankRow, String> {
    let clock = Stopwatch::start();
    let outcome = solve_completion(inst, cfg, perturbations, &clock).map_err(|e| e.to_string())?;
    let seconds = clock.now();
    let problem = build_lowrank(inst).map_err(|e| e.to_string())?;
    let r = &outcome.report;
    let mut steps = StepCounts::default();
    for (_, a) in &outcome.attempts {
        steps.add(StepCounts::of(a));
    }
    let kkt = if r.status == Status::Solved {
        let k = problem.recover_kkt(&r.iterate.x, &r.iterate.lambda).map_err(|e| e.to_string())?;
        let lambda = problem.embed_multiplier(&k.x, &k.sigma).map_err(|e| e.to_string())?;
        let h = problem.residual(&k.x, &lambda).map_err(|e| e.to_string())?;
        Some(KktCheck {
            certificate: k.certificate.worst(),
            embedded_residual: h.norm(),
        })
    } else {
        None
    };
    Ok(LowrankRow {
        p: inst.p,
        rank: inst.r_max,
        seed: inst.seed,
        status: r.status.as_str().to_string(),
        residual: r.residual(),
        iters: r.iterations,
        total_iters: outcome.attempts.iter().map(|(_, a)| a.iterations).sum(),
        strategy: outcome.strategy.to_string(),
        attempts: outcome.attempts.len(),
        objective: problem.model.objective(&r.iterate.x),
        recovery_error: recovery_error(inst, &problem.model, &r.iterate.x),
        seconds,
        steps,
        kkt,
    })
}

pub fn run_lowrank(args: &LowrankArgs, jobs: usize) -> Result<Vec<LowrankRow>, String> {
    let ps: Vec<f64> = parse_list(&args.p, "p")?;
    let ranks: Vec<usize> = parse_list(&args.rank, "rank")?;
    let cfg = lowrank_config(&args.solver);
    cfg.validate().map_err(|e| e.to_string())?;
    let mut grid = Vec::new();
    for &r in &ranks {
        for &p in &ps {
            for k in 0..args.seeds {
                grid.push((p, r, args.seed_base + k));
            }
        }
    }
    let results = run_parallel(&grid, jobs, |(p, r, seed)| {
        let inst = generate_completion(args.n, *p, *r, *seed).map_err(|e| e.to_string())?;
        solve_lowrank_instance(&inst, &cfg, args.perturbations)
    });
    results.into_iter().collect()
}

/// Percentage of `(rank, p)` instances solved within each wall-time threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdRow {
    pub rank: usize,
    pub p: f64,
    pub threshold: f64,
    pub solved: usize,
    pub total: usize,
    pub percent: f64,
}

pub fn cumulative_summary(rows: &[LowrankRow], thresholds: &[f64]) -> Vec<ThresholdRow> {
    let mut keys: Vec<(usize, f64)> = Vec::new();
    for r in rows {
        if !keys.iter().any(|k| k.0 == r.rank && k.1 == r.p) {
            keys.push((r.rank, r.p));
        }
    }
    let mut out = Vec::new();
    for (rank, p) in keys {
        let group: Vec<&LowrankRow> = rows.iter().filter(|r| r.rank == rank && r.p == p).collect();
        for &t in thresholds {
            let solved = group.iter().filter(|r| r.solved() && r.seconds <= t).count();
            out.push(ThresholdRow {
                rank,
                p,
                threshold: t,
                solved,
                total: group.len(),
                percent: 100.0 * solved as f64 / group.len() as f64,
            });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parallel_map_keeps_order() {
        let items: Vec<u64> = (0..17).collect();
        let out = run_parallel(&items, 4, |x| x * x);
        assert_eq!(out, items.iter().map(|x| x * x).collect::<Vec<_>>());
    }

    #[test]
    fn summary_counts_within_threshold() {
        let row = |seconds: f64, status: &str| LowrankRow {
            p: 0.1,
            rank: 1,
            seed: 0,
            status: status.into(),
            residual: 0.0,
            iters: 1,
            total_iters: 1,
            strategy: "rank-one".into(),
            attempts: 1,
            objective: 0.0,
            recovery_error: 0.0,
            seconds,
            steps: StepCounts::default(),
            kkt: None,
        };
        let rows = [row(1.0, "Solved"), row(5.0, "Solved"), row(0.5, "MaxIterations"), row(50.0, "Solved")];
        let s = cumulative_summary(&rows, &[2.0, 10.0, 100.0]);
        assert_eq!(s.iter().map(|r| r.solved).collect::<Vec<_>>(), [1, 2, 3]);
        assert_eq!(s[2].percent, 75.0);
    }
}
