//! Globalized semi-smooth Newton method for residual systems `H(z) = 0` with
//! merit function `θ = ½‖H‖²`.
//!
//! Each iteration tries the Newton direction `J d = −H`. When the solve fails
//! or the direction is not a usable descent direction, the regularized normal
//! equation `(JᵀJ + √θ I) d = −∇θ` is used instead; at stationary points of
//! `θ` that are not strongly stationary the right-hand side becomes the
//! feasibility gradient `∇θ^feas`. Steps are globalized by Armijo
//! backtracking.

use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{check_dim, Error, Result};
use crate::linalg::{self, Matrix, Vector};
use crate::ncp::{grad_theta, split_with_jacobian, theta_feas, Iterate, KktCertificate, ResidualSystem};

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Armijo constant in `(0, ½)`.
    pub c: f64,
    /// Stop once `‖H‖ < tol`.
    pub tol: f64,
    /// Newton directions shorter than this are rejected.
    pub dtol: f64,
    pub maxiter: usize,
    /// Maximum number of trial steps per linesearch.
    pub maxiter_ls: usize,
    /// The Newton solve fails when the smallest pivot is below this times the
    /// largest one.
    pub singular_pivot_rel: f64,
    /// Relative residual a successful Newton solve must reach.
    pub newton_residual_rel: f64,
    /// Gradients with norm at most this are treated as zero.
    pub stationary_eps: f64,
    /// Stop with [`Status::ProgressStalled`] when a step moves the iterate by
    /// less than this.
    pub progress_eps: Option<f64>,
    /// Wall-clock budget in seconds, checked against the solve's [`Clock`].
    pub time_limit: Option<f64>,
    /// Records `λ_min(JᵀJ) + √θ` for regularized steps in the trace.
    pub rho_diagnostic: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            c: 0.1,
            tol: 1e-8,
            dtol: 1e-12,
            maxiter: 100,
            maxiter_ls: 20,
            singular_pivot_rel: 1e-12,
            newton_residual_rel: 1e-10,
            stationary_eps: 1e-10,
            progress_eps: None,
            time_limit: None,
            rho_diagnostic: false,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidArgument(alloc::format!("{name} must be positive, got {v}")))
            }
        };
        if !(self.c > 0.0 && self.c < 0.5) {
            return Err(Error::InvalidArgument(alloc::format!(
                "Armijo constant must lie in (0, 1/2), got {}",
                self.c
            )));
        }
        positive("tol", self.tol)?;
        positive("dtol", self.dtol)?;
        positive("singular_pivot_rel", self.singular_pivot_rel)?;
        positive("newton_residual_rel", self.newton_residual_rel)?;
        positive("stationary_eps", self.stationary_eps)?;
        if let Some(p) = self.progress_eps {
            positive("progress_eps", p)?;
        }
        if let Some(t) = self.time_limit {
            positive("time_limit", t)?;
        }
        if self.maxiter_ls == 0 {
            return Err(Error::InvalidArgument("maxiter_ls must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Status {
    Solved,
    /// `∇θ = 0` and `∇θ^feas = 0` with `θ > 0`.
    StronglyStationary,
    MaxIterations,
    LinesearchStalled,
    ProgressStalled,
    TimeLimit,
}

impl Status {
    pub fn as_str(&self) -> &'static str {
        match self {
            Status::Solved => "Solved",
            Status::StronglyStationary => "StronglyStationary",
            Status::MaxIterations => "MaxIterations",
            Status::LinesearchStalled => "LinesearchStalled",
            Status::ProgressStalled => "ProgressStalled",
            Status::TimeLimit => "TimeLimit",
        }
    }
}

impl core::fmt::Display for Status {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StepKind {
    Newton,
    Regularized,
    FeasEscape,
}

impl StepKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            StepKind::Newton => "Newton",
            StepKind::Regularized => "Regularized",
            StepKind::FeasEscape => "FeasEscape",
        }
    }
}

/// One accepted (or finally rejected) outer iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceEntry {
    pub iteration: usize,
    /// `‖H‖` before the step.
    pub residual: f64,
    /// `θ` before the step.
    pub theta: f64,
    pub step_kind: StepKind,
    pub alpha: f64,
    pub direction_norm: f64,
    pub linesearch_count: usize,
    /// Slope used by the Armijo test: `∇θᵀd`, or `(∇θ^feas)ᵀd` for escapes.
    pub directional_derivative: f64,
    /// Merit value the Armijo test compared against: `θ`, or `θ^feas`.
    pub merit_before: f64,
    /// Merit value at the accepted point.
    pub merit_after: f64,
    pub rho: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub status: Status,
    pub iterate: Iterate,
    pub iterations: usize,
    pub trace: Vec<TraceEntry>,
    /// Seconds measured by the solve's clock; zero with [`NoClock`].
    pub wall_time: f64,
    pub certificate: KktCertificate,
}

impl SolveReport {
    pub fn residual(&self) -> f64 {
        self.iterate.residual_norm()
    }

    pub fn theta(&self) -> f64 {
        self.iterate.theta
    }
}

/// Source of elapsed time in seconds. The core crate has no clock of its own.
pub trait Clock {
    fn now(&self) -> f64;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct NoClock;

impl Clock for NoClock {
    fn now(&self) -> f64 {
        0.0
    }
}

/// Newton direction `J d = −H`; the flag is false when the pivoted solve
/// detects singularity or misses the residual target.
pub fn newton_direction(jacobian: &Matrix, h: &Vector, config: &SolverConfig) -> (Vector, bool) {
    if h.iter().all(|v| *v == 0.0) {
        return (Vector::zeros(h.len()), true);
    }
    match linalg::solve_pivoted(jacobian, &(-h), config.singular_pivot_rel, config.newton_residual_rel) {
        Some(d) => (d, true),
        None => (Vector::zeros(h.len()), false),
    }
}

/// Solves `(JᵀJ + √θ I) d = −rhs`.
pub fn regularized_direction(jacobian: &Matrix, theta: f64, rhs: &Vector) -> Result<Vector> {
    if !(theta > 0.0) {
        return Err(Error::ContractViolation(
            "regularized direction requested at θ = 0".into(),
        ));
    }
    check_dim("regularized right-hand side", jacobian.ncols(), rhs.len())?;
    Ok(linalg::solve_regularized(jacobian, theta.sqrt(), &(-rhs)))
}

/// Which merit function a linesearch decreases.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Merit {
    Theta,
    ThetaFeas,
}

impl Merit {
    fn eval(&self, primal_dim: usize, it: &Iterate) -> f64 {
        match self {
            Merit::Theta => it.theta,
            Merit::ThetaFeas => theta_feas(primal_dim, it),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinesearchOutcome {
    pub alpha: f64,
    /// The accepted point, or `None` when every trial failed.
    pub iterate: Option<Iterate>,
    pub count: usize,
    pub merit_before: f64,
    pub merit_after: f64,
}

/// Armijo backtracking `α ∈ {1, ½, ¼, …}` with at most `maxiter_ls` trials.
pub fn armijo_linesearch<S: ResidualSystem + ?Sized>(
    sys: &S,
    it: &Iterate,
    direction: &Vector,
    directional_derivative: f64,
    merit: Merit,
    config: &SolverConfig,
) -> Result<LinesearchOutcome> {
    if !(directional_derivative < 0.0) {
        return Err(Error::ContractViolation(alloc::format!(
            "linesearch needs a descent direction, slope {directional_derivative:e}"
        )));
    }
    check_dim("search direction", sys.dim(), direction.len())?;
    let n = sys.primal_dim();
    let m = sys.dual_dim();
    let base = merit.eval(n, it);
    let mut alpha = 1.0;
    let mut last = f64::NAN;
    for count in 1..=config.maxiter_ls {
        let x = &it.x + direction.rows(0, n) * alpha;
        let lambda = &it.lambda + direction.rows(n, m) * alpha;
        let trial = sys.evaluate(x, lambda)?;
        let value = merit.eval(n, &trial);
        last = value;
        if value <= base + alpha * config.c * directional_derivative {
            return Ok(LinesearchOutcome {
                alpha,
                iterate: Some(trial),
                count,
                merit_before: base,
                merit_after: value,
            });
        }
        alpha *= 0.5;
    }
    Ok(LinesearchOutcome {
        alpha: alpha * 2.0,
        iterate: None,
        count: config.maxiter_ls,
        merit_before: base,
        merit_after: last,
    })
}

/// Runs the method without a wall clock.
pub fn solve<S: ResidualSystem + ?Sized>(
    sys: &S,
    x0: Vector,
    lambda0: Vector,
    config: &SolverConfig,
) -> Result<SolveReport> {
    solve_with_clock(sys, x0, lambda0, config, &NoClock)
}

fn finish<S: ResidualSystem + ?Sized>(
    sys: &S,
    status: Status,
    iterate: Iterate,
    trace: Vec<TraceEntry>,
    start: f64,
    clock: &dyn Clock,
) -> Result<SolveReport> {
    let certificate = sys.certificate(&iterate)?;
    Ok(SolveReport {
        status,
        iterations: trace.len(),
        iterate,
        trace,
        wall_time: (clock.now() - start).max(0.0),
        certificate,
    })
}

fn rho_estimate(jacobian: &Matrix, theta: f64) -> f64 {
    linalg::min_eigenvalue(&linalg::gram(jacobian)) + theta.sqrt()
}

pub fn solve_with_clock<S: ResidualSystem + ?Sized>(
    sys: &S,
    x0: Vector,
    lambda0: Vector,
    config: &SolverConfig,
    clock: &dyn Clock,
) -> Result<SolveReport> {
    config.validate()?;
    let start = clock.now();
    let n = sys.primal_dim();
    let mut it = sys.evaluate(x0, lambda0)?;
    let mut trace = Vec::new();
    loop {
        if it.residual_norm() < config.tol {
            return finish(sys, Status::Solved, it, trace, start, clock);
        }
        if trace.len() >= config.maxiter {
            return finish(sys, Status::MaxIterations, it, trace, start, clock);
        }
        if let Some(limit) = config.time_limit {
            if clock.now() - start > limit {
                return finish(sys, Status::TimeLimit, it, trace, start, clock);
            }
        }

        let j = sys.jacobian(&it)?;
        let grad = grad_theta(&j, &it);
        let (d_newton, ok) = newton_direction(&j, &it.h, config);
        let slope_newton = grad.dot(&d_newton);

        let (kind, d, slope, merit) = if ok && slope_newton < 0.0 && d_newton.norm() >= config.dtol {
            (StepKind::Newton, d_newton, slope_newton, Merit::Theta)
        } else if grad.norm() > config.stationary_eps {
            let d = regularized_direction(&j, it.theta, &grad)?;
            let s = grad.dot(&d);
            (StepKind::Regularized, d, s, Merit::Theta)
        } else {
            let split = split_with_jacobian(n, &it, &j);
            if split.grad_feas.norm() > config.stationary_eps {
                let d = regularized_direction(&j, it.theta, &split.grad_feas)?;
                let s = split.grad_feas.dot(&d);
                (StepKind::FeasEscape, d, s, Merit::ThetaFeas)
            } else {
                return finish(sys, Status::StronglyStationary, it, trace, start, clock);
            }
        };

        let rho = match (config.rho_diagnostic, kind) {
            (true, StepKind::Regularized | StepKind::FeasEscape) => Some(rho_estimate(&j, it.theta)),
            _ => None,
        };
        let mut entry = TraceEntry {
            iteration: trace.len(),
            residual: it.residual_norm(),
            theta: it.theta,
            step_kind: kind,
            alpha: 0.0,
            direction_norm: d.norm(),
            linesearch_count: 0,
            directional_derivative: slope,
            merit_before: merit.eval(n, &it),
            merit_after: f64::NAN,
            rho,
        };
        if !(slope < 0.0) {
            trace.push(entry);
            return finish(sys, Status::LinesearchStalled, it, trace, start, clock);
        }

        let ls = armijo_linesearch(sys, &it, &d, slope, merit, config)?;
        entry.alpha = ls.alpha;
        entry.linesearch_count = ls.count;
        entry.merit_after = ls.merit_after;
        trace.push(entry);
        let next = match ls.iterate {
            Some(next) => next,
            None => return finish(sys, Status::LinesearchStalled, it, trace, start, clock),
        };
        let moved = (ls.alpha * d.norm()).abs();
        it = next;
        if let Some(eps) = config.progress_eps {
            if moved < eps && it.residual_norm() >= config.tol {
                return finish(sys, Status::ProgressStalled, it, trace, start, clock);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn regularized_with_zero_jacobian_scales_rhs() {
        let j = Matrix::zeros(2, 2);
        let rhs = Vector::from_vec(alloc::vec![1.0, -2.0]);
        let d = regularized_direction(&j, 0.5, &rhs).unwrap();
        let expect = -&rhs / 0.5f64.sqrt();
        assert!((d - expect).norm() < 1e-14);
    }

    #[test]
    fn regularized_at_solution_is_contract_violation() {
        let j = Matrix::identity(2, 2);
        let rhs = Vector::zeros(2);
        assert!(matches!(regularized_direction(&j, 0.0, &rhs), Err(Error::ContractViolation(_))));
    }

    #[test]
    fn newton_zero_residual_gives_zero_direction() {
        let (d, ok) = newton_direction(&Matrix::identity(3, 3), &Vector::zeros(3), &SolverConfig::default());
        assert!(ok);
        assert_eq!(d, Vector::zeros(3));
    }

    #[test]
    fn newton_singular_flag() {
        let mut j = Matrix::identity(3, 3);
        j.row_mut(1).fill(0.0);
        let h = Vector::from_vec(alloc::vec![1.0, 1.0, 1.0]);
        let (_, ok) = newton_direction(&j, &h, &SolverConfig::default());
        assert!(!ok);
    }

    #[test]
    fn config_rejects_bad_armijo_constant() {
        let cfg = SolverConfig {
            c: 0.5,
            ..SolverConfig::default()
        };
        assert!(cfg.validate().is_err());
    }
}
