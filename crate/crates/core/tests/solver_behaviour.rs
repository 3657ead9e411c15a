use std::f64::consts::PI;

use conewton::ncp::{grad_theta, split_residual, ResidualSystem};
use conewton::problems::lowrank::generate_completion;
use conewton::problems::{build_circular, build_identity_qp, generate_circular, starting_point, StartKind};
use conewton::solver::{armijo_linesearch, newton_direction, Merit};
use conewton::{solve, Cone, Matrix, SolverConfig, Status, StepKind, Vector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn contraction_q(n: usize, seed: u64) -> Matrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let raw = Matrix::from_fn(n, n, |_, _| StandardNormal.sample(&mut rng));
    let u = raw.qr().q();
    let d = Vector::from_fn(n, |i, _| if i == 0 { 0.5 } else if i == 1 { 1.5 } else { rng.random_range(0.5..1.5) });
    &u * Matrix::from_diagonal(&d) * u.transpose()
}

#[test]
fn identity_qp_has_unique_solution() {
    for cone in [Cone::Nonneg(8), Cone::SecondOrder(8)] {
        let q = contraction_q(8, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let lin = Vector::from_fn(8, |_, _| StandardNormal.sample(&mut rng));
        let p = build_identity_qp(q, lin, cone).unwrap();
        let mut sols: Vec<Vector> = Vec::new();
        for s in 0..5 {
            let (x0, l0) = starting_point(8, 8, StartKind::Sp3, false, s).unwrap();
            let r = solve(&p, x0 * 4.0, l0 * 4.0, &SolverConfig::default()).unwrap();
            assert_eq!(r.status, Status::Solved);
            sols.push(r.iterate.x.clone());
        }
        for s in &sols[1..] {
            assert!((s - &sols[0]).norm() < 1e-6);
        }
    }
}

#[test]
fn newton_slope_equals_minus_residual_squared() {
    let inst = generate_circular(20, 5, PI / 6.0, 1).unwrap();
    let p = build_circular(&inst).unwrap();
    let r = solve(&p, Vector::zeros(20), Vector::zeros(5), &SolverConfig::default()).unwrap();
    assert_eq!(r.status, Status::Solved);
    let mut newton = 0;
    for e in &r.trace {
        if e.step_kind == StepKind::Newton {
            newton += 1;
            let target = -(e.residual * e.residual);
            assert!((e.directional_derivative - target).abs() <= 1e-8 * target.abs());
        }
        assert!(e.merit_after <= e.merit_before + e.alpha * 0.1 * e.directional_derivative);
    }
    assert!(newton > 0);
}

#[test]
fn trace_theta_decreases() {
    let inst = generate_circular(30, 7, PI / 3.0, 2).unwrap();
    let p = build_circular(&inst).unwrap();
    let (y0, s0) = starting_point(30, 7, StartKind::Sp3, true, 5).unwrap();
    let r = solve(&p, y0, s0, &SolverConfig::default()).unwrap();
    for w in r.trace.windows(2) {
        assert!(w[1].theta < w[0].theta);
    }
}

#[test]
fn runs_are_deterministic() {
    let inst = generate_circular(30, 7, PI / 12.0, 8).unwrap();
    let p = build_circular(&inst).unwrap();
    let a = solve(&p, Vector::zeros(30), Vector::zeros(7), &SolverConfig::default()).unwrap();
    let b = solve(&p, Vector::zeros(30), Vector::zeros(7), &SolverConfig::default()).unwrap();
    assert_eq!(a, b);
}

#[test]
fn exact_newton_step_accepts_unit_step() {
    let q = contraction_q(4, 9);
    let p = build_identity_qp(q, Vector::from_row_slice(&[1.0, -1.0, 0.5, 0.2]), Cone::Free(4)).unwrap();
    let it = p.evaluate(Vector::from_row_slice(&[0.3, 0.1, -0.2, 0.4]), Vector::zeros(4)).unwrap();
    let j = p.jacobian(&it).unwrap();
    let (d, ok) = newton_direction(&j, &it.h, &SolverConfig::default());
    assert!(ok);
    let slope = grad_theta(&j, &it).dot(&d);
    let ls = armijo_linesearch(&p, &it, &d, slope, Merit::Theta, &SolverConfig::default()).unwrap();
    assert_eq!(ls.alpha, 1.0);
    assert_eq!(ls.count, 1);
    assert!(ls.iterate.unwrap().theta < 1e-20);
}

#[test]
fn linesearch_rejects_ascent_direction() {
    let p = build_identity_qp(Matrix::identity(2, 2), Vector::zeros(2), Cone::Free(2)).unwrap();
    let it = p.evaluate(Vector::from_row_slice(&[1.0, 0.0]), Vector::zeros(2)).unwrap();
    let d = Vector::from_row_slice(&[1.0, 0.0, 0.0, 0.0]);
    assert!(armijo_linesearch(&p, &it, &d, 0.5, Merit::Theta, &SolverConfig::default()).is_err());
}

#[test]
fn flat_direction_exhausts_linesearch() {
    let p = build_identity_qp(Matrix::identity(2, 2), Vector::zeros(2), Cone::Free(2)).unwrap();
    let it = p.evaluate(Vector::from_row_slice(&[1.0, 0.0]), Vector::zeros(2)).unwrap();
    let d = grad_theta(&p.jacobian(&it).unwrap(), &it) * 1e3;
    let ls = armijo_linesearch(&p, &it, &d, -1e-300, Merit::Theta, &SolverConfig::default()).unwrap();
    assert!(ls.iterate.is_none());
    assert_eq!(ls.count, 20);
}

/// Two-dimensional second-order cone with a fixed multiplier in the region
/// where `V` is the rank-one projector `eeᵀ`. The point is built so that
/// `H^opt ⊥ e`, `H^feas ∥ e` and `∇θ = 0` while `∇θ^feas ≠ 0`.
fn escape_instance() -> (conewton::NcpProblem<conewton::problems::QuadraticModel>, Vector, Vector) {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let e = Vector::from_row_slice(&[s, s]);
    let qp = Vector::from_row_slice(&[s, -s]);
    let (a, b) = (1.0, 0.8);
    let basis = Matrix::from_columns(&[e.clone(), qp.clone()]);
    let q_mat = &basis * Matrix::from_row_slice(2, 2, &[a, b, b, 0.0]) * basis.transpose();
    let lambda = Vector::from_row_slice(&[0.2, 1.0]);
    let sigma = Cone::SecondOrder(2).project(&lambda).unwrap();
    let alpha = 0.5;
    let h_opt = &qp * alpha;
    let h_feas = &e * (-alpha * b);
    let x = &h_feas + &sigma - &lambda;
    let lin = &h_opt - &q_mat * &x + &sigma;
    let p = build_identity_qp(q_mat, lin, Cone::SecondOrder(2)).unwrap();
    (p, x, lambda)
}

#[test]
fn escape_step_decreases_feasibility_merit() {
    let (p, x, lambda) = escape_instance();
    let it = p.evaluate(x.clone(), lambda.clone()).unwrap();
    let split = split_residual(&p, &it).unwrap();
    assert!((&split.grad_opt + &split.grad_feas).norm() < 1e-12);
    assert!(split.grad_feas.norm() > 1e-3);
    let cfg = SolverConfig {
        maxiter: 1,
        ..SolverConfig::default()
    };
    let r = solve(&p, x, lambda, &cfg).unwrap();
    let first = &r.trace[0];
    assert_eq!(first.step_kind, StepKind::FeasEscape);
    assert!(first.merit_after < first.merit_before);
}

#[test]
fn completion_planted_matrix_has_full_rank_bound() {
    for r in 1..=3 {
        let inst = generate_completion(10, 0.2, r, 40 + r as u64).unwrap();
        let sv = inst.planted.clone().svd(false, false).singular_values;
        let count = sv.iter().filter(|s| **s > 1e-10).count();
        assert_eq!(count, r);
    }
}

/// `min cᵀx s.t. aᵀx = b, x ∈ L²` in two dimensions, by a dense grid over the
/// feasible segment.
#[test]
fn tiny_circular_program_matches_grid_search() {
    let inst = generate_circular(2, 1, PI / 6.0, 1).unwrap();
    let p = build_circular(&inst).unwrap();
    let r = solve(&p, Vector::zeros(2), Vector::zeros(1), &SolverConfig::default()).unwrap();
    assert_eq!(r.status, Status::Solved);
    let kkt = p.recover_kkt(&r.iterate.x, &r.iterate.lambda).unwrap();
    let (a1, a2) = (inst.a[(0, 0)], inst.a[(0, 1)]);
    let t = inst.omega.tan();
    let cone = Cone::circular(2, inst.omega).unwrap();
    let mut best = (f64::INFINITY, Vector::zeros(2));
    let steps = 2_000_000;
    let span = 50.0;
    for k in 0..=steps {
        let x1 = span * k as f64 / steps as f64;
        let (x, ok) = if a2.abs() > 1e-12 {
            let x2 = (inst.b[0] - a1 * x1) / a2;
            (Vector::from_row_slice(&[x1, x2]), x2.abs() <= x1 * t)
        } else {
            (Vector::from_row_slice(&[inst.b[0] / a1, 0.0]), true)
        };
        if ok && cone.contains(&x, 1e-12).unwrap() {
            let v = inst.c.dot(&x);
            if v < best.0 {
                best = (v, x);
            }
        }
    }
    assert!((kkt.x - best.1).norm() < 1e-4);
}

/// In two dimensions the wedge makes `V` piecewise constant and `θ` can have
/// nonzero local minima. Runs that do not solve must stop at a feasible point
/// with vanishing gradient rather than diverge.
#[test]
fn tiny_circular_failures_are_stationary() {
    let cfg = SolverConfig::default();
    for seed in 0..10 {
        let inst = generate_circular(2, 1, PI / 6.0, seed).unwrap();
        let p = build_circular(&inst).unwrap();
        let r = solve(&p, Vector::zeros(2), Vector::zeros(1), &cfg).unwrap();
        if r.status == Status::Solved {
            continue;
        }
        assert!(matches!(r.status, Status::StronglyStationary | Status::LinesearchStalled));
        let g = grad_theta(&p.jacobian(&r.iterate).unwrap(), &r.iterate);
        assert!(g.norm() < 1e-8, "seed {seed}");
        assert!(r.theta() > 1e-3);
    }
}
