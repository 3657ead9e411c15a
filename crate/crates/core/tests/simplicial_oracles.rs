use std::f64::consts::PI;

use conewton::cones::circular_map;
use conewton::simplicial::{closedness_diagnostic, simplicial_project, INNER_MAXITER};
use conewton::{Closedness, Cone, Matrix, Vector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Projection onto `M R^k_+` by enumerating every active set and keeping the
/// closest feasible candidate.
fn active_set_oracle(m: &Matrix, x: &Vector) -> Vector {
    let k = m.ncols();
    let mut best = Vector::zeros(m.nrows());
    let mut best_dist = x.norm();
    for mask in 1u32..(1 << k) {
        let cols: Vec<usize> = (0..k).filter(|i| mask & (1 << i) != 0).collect();
        let sub = Matrix::from_fn(m.nrows(), cols.len(), |r, c| m[(r, cols[c])]);
        let Some(z) = (sub.transpose() * &sub).lu().solve(&(sub.transpose() * x)) else {
            continue;
        };
        if z.iter().any(|v| *v < -1e-12) {
            continue;
        }
        let p = &sub * z;
        let dist = (x - &p).norm();
        if dist < best_dist {
            best_dist = dist;
            best = p;
        }
    }
    best
}

#[test]
fn nonneg_base_matches_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..50 {
        let m = Matrix::from_fn(2, 2, |_, _| rng.random_range(-2.0..2.0));
        if m.determinant().abs() < 1e-2 {
            continue;
        }
        let x = Vector::from_fn(2, |_, _| rng.random_range(-3.0..3.0));
        let p = simplicial_project(&m, &Cone::Nonneg(2), &x, None).unwrap();
        let o = active_set_oracle(&m, &x);
        assert!((p.point - o).norm() < 1e-8);
    }
}

#[test]
fn nonneg_base_in_three_dimensions() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    for _ in 0..20 {
        let m = Matrix::from_fn(3, 3, |_, _| rng.random_range(-1.0..1.0)) + Matrix::identity(3, 3) * 1.5;
        let x = Vector::from_fn(3, |_, _| rng.random_range(-3.0..3.0));
        let p = simplicial_project(&m, &Cone::Nonneg(3), &x, None).unwrap();
        let o = active_set_oracle(&m, &x);
        assert!((p.point - o).norm() < 1e-8);
    }
}

#[test]
fn circular_image_matches_closed_form() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for omega in [PI / 12.0, PI / 6.0, PI / 4.0, PI / 3.0] {
        let m = circular_map(4, omega);
        let closed = Cone::circular(4, omega).unwrap();
        for _ in 0..10 {
            let x = Vector::from_fn(4, |_, _| rng.random_range(-2.0..2.0));
            let p = simplicial_project(&m, &Cone::SecondOrder(4), &x, None).unwrap();
            let q = closed.project(&x).unwrap();
            assert!((p.point - q).norm() < 1e-10, "omega = {omega}");
        }
    }
}

#[test]
fn rank_deficient_orthant_image() {
    let m = Matrix::from_row_slice(2, 3, &[1.0, 0.0, 1.0, 0.0, 1.0, 1.0]);
    let x = Vector::from_row_slice(&[-1.0, 2.0]);
    let p = simplicial_project(&m, &Cone::Nonneg(3), &x, None).unwrap();
    let o = active_set_oracle(&m, &x);
    assert!((p.point - o).norm() < 1e-8);
    assert_eq!(closedness_diagnostic(&m, &Cone::Nonneg(3)), Closedness::Unknown);
}

#[test]
fn opposite_columns_span_image() {
    let m = Matrix::from_row_slice(1, 2, &[1.0, -1.0]);
    assert_eq!(
        closedness_diagnostic(&m, &Cone::Nonneg(2)),
        Closedness::GuaranteedClosedImageSpace
    );
    let x = Vector::from_row_slice(&[-3.5]);
    let p = simplicial_project(&m, &Cone::Nonneg(2), &x, None).unwrap();
    assert!((p.point - x).norm() < 1e-9);
}

#[test]
fn warm_start_reuses_solution() {
    let m = Matrix::from_row_slice(2, 2, &[2.0, 0.3, -0.4, 1.0]);
    let x = Vector::from_row_slice(&[-1.0, 2.5]);
    let cold = simplicial_project(&m, &Cone::Nonneg(2), &x, None).unwrap();
    let warm = simplicial_project(&m, &Cone::Nonneg(2), &x, Some(&cold.z_star)).unwrap();
    assert!(warm.warm_start_used);
    assert!(warm.inner_iterations <= cold.inner_iterations);
    assert!((warm.point - cold.point).norm() < 1e-10);
}

#[test]
fn rank_deficient_maps_match_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(24);
    let mut restarted = 0;
    for _ in 0..200 {
        let rows = rng.random_range(2..=5);
        let cols = rng.random_range(rows + 1..=8);
        let rank = rng.random_range(1..rows);
        let m = Matrix::from_fn(rows, rank, |_, _| rng.random_range(-1.0..1.0))
            * Matrix::from_fn(rank, cols, |_, _| rng.random_range(-1.0..1.0));
        let x = Vector::from_fn(rows, |_, _| rng.random_range(-30.0..30.0));
        let p = simplicial_project(&m, &Cone::Nonneg(cols), &x, None).unwrap();
        let o = active_set_oracle(&m, &x);
        assert!((&p.point - &o).norm() <= 1e-8 * (1.0 + x.norm()), "{m} {x}");
        restarted += usize::from(p.inner_iterations > INNER_MAXITER);
    }
    assert!(restarted > 0);
}
