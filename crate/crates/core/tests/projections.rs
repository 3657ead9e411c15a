use std::f64::consts::PI;

use conewton::linalg::{min_eigenvalue, smat, svec, sym_eigen};
use conewton::{Cone, Matrix, Vector};
use proptest::prelude::*;

fn golden_min(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..200 {
        let c = b - r * (b - a);
        let d = a + r * (b - a);
        if f(c) < f(d) {
            b = d;
        } else {
            a = c;
        }
    }
    0.5 * (a + b)
}

/// Projection onto `{‖u‖ ≤ x₁ t}` by comparing the apex, the point itself
/// and a one-dimensional search along the boundary ray through `x`.
fn circular_oracle(x: &Vector, t: f64) -> Vector {
    let n = x.len();
    let u = x.rows(1, n - 1).into_owned();
    let nu = u.norm();
    if nu <= x[0] * t {
        return x.clone();
    }
    let dir = if nu > 0.0 { u / nu } else { Vector::zeros(n - 1) };
    let ray = |s: f64| {
        let mut p = Vector::zeros(n);
        p[0] = s;
        p.rows_mut(1, n - 1).copy_from(&(&dir * (s * t)));
        p
    };
    let hi = 4.0 * x.norm() + 1.0;
    let s = golden_min(|s| (ray(s) - x).norm_squared(), 0.0, hi);
    let best = ray(s.max(0.0));
    if best.metric_distance(x) < x.norm() {
        best
    } else {
        Vector::zeros(n)
    }
}

fn vec_of(v: &[f64]) -> Vector {
    Vector::from_row_slice(v)
}

#[test]
fn soc_matches_boundary_search() {
    let cone = Cone::SecondOrder(4);
    for x in [
        vec_of(&[0.0, 3.0, 4.0, 0.0]),
        vec_of(&[-1.0, 0.5, 0.2, -0.3]),
        vec_of(&[2.0, 3.0, -1.0, 1.0]),
        vec_of(&[-5.0, 1.0, 0.0, 0.0]),
        vec_of(&[3.0, 1.0, 1.0, 1.0]),
    ] {
        let p = cone.project(&x).unwrap();
        let o = circular_oracle(&x, 1.0);
        assert!((p - o).norm() < 1e-7, "x = {x:?}");
    }
}

#[test]
fn circular_matches_boundary_search() {
    for omega in [PI / 12.0, PI / 6.0, PI / 3.0, 5.0 * PI / 12.0] {
        let cone = Cone::circular(3, omega).unwrap();
        for x in [
            vec_of(&[0.3, 1.0, -2.0]),
            vec_of(&[-0.5, 0.1, 0.1]),
            vec_of(&[1.0, 0.2, 0.1]),
            vec_of(&[-2.0, 3.0, 1.0]),
        ] {
            let p = cone.project(&x).unwrap();
            let o = circular_oracle(&x, omega.tan());
            assert!((p - o).norm() < 1e-7, "omega = {omega}, x = {x:?}");
        }
    }
}

#[test]
fn psd_projection_satisfies_moreau_characterization() {
    let a = Matrix::from_row_slice(3, 3, &[1.0, 2.0, -1.0, 2.0, -3.0, 0.5, -1.0, 0.5, 0.2]);
    let x = svec(&a);
    let cone = Cone::Psd(3);
    let p = cone.project(&x).unwrap();
    let q = &p - &x;
    assert!(min_eigenvalue(&smat(&p, 3)) > -1e-12);
    assert!(min_eigenvalue(&smat(&q, 3)) > -1e-12);
    assert!(p.dot(&q).abs() < 1e-12);
}

#[test]
fn dimension_errors_are_reported() {
    let cone = Cone::Nonneg(3);
    assert!(cone.project(&Vector::zeros(2)).is_err());
    assert!(Cone::circular(3, 0.0).is_err());
    assert!(Cone::circular(3, PI / 2.0).is_err());
}

fn families() -> Vec<Cone> {
    vec![
        Cone::Nonneg(5),
        Cone::SecondOrder(5),
        Cone::circular(5, PI / 12.0).unwrap(),
        Cone::circular(5, PI / 3.0).unwrap(),
        Cone::Psd(3),
        Cone::Product(vec![Cone::Nonneg(2), Cone::SecondOrder(3), Cone::Zero(1), Cone::Free(1)]),
        Cone::simplicial(
            Matrix::from_row_slice(3, 3, &[1.0, 0.5, 0.0, 0.0, 1.0, -0.3, 0.2, 0.0, 1.5]),
            Cone::Nonneg(3),
        )
        .unwrap(),
    ]
}

fn check_invariants(cone: &Cone, x: &Vector, y: &Vector) -> Result<(), TestCaseError> {
    let px = cone.project(x).unwrap();
    let py = cone.project(y).unwrap();
    prop_assert!((&px - &py).norm() <= (x - y).norm() * (1.0 + 1e-9) + 1e-9);
    let q = x - &px;
    prop_assert!(px.dot(&q).abs() <= 1e-8 * (1.0 + x.norm_squared()));
    prop_assert!(cone.dual_contains(&(-&q), 1e-8).unwrap());
    let v = cone.clarke_element(x).unwrap().into_matrix();
    prop_assert!((&v - v.transpose()).norm() <= 1e-10 * (1.0 + v.norm()));
    let eig = sym_eigen(&v).eigenvalues;
    prop_assert!(eig.iter().all(|l| *l >= -1e-8 && *l <= 1.0 + 1e-8));
    prop_assert!((&v * x - &px).norm() <= 1e-8 * (1.0 + px.norm()));
    let lin = &py - &px - &v * (y - x);
    prop_assert!(lin.norm() <= (y - x).norm() * (1.0 + 1e-9) + 1e-9);
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn projection_invariants(
        which in 0usize..7,
        xs in proptest::collection::vec(-3.0f64..3.0, 6),
        ys in proptest::collection::vec(-3.0f64..3.0, 6),
    ) {
        let cone = &families()[which];
        let d = cone.dim();
        let x = Vector::from_iterator(d, xs.iter().copied().cycle().take(d));
        let y = Vector::from_iterator(d, ys.iter().copied().cycle().take(d));
        check_invariants(cone, &x, &y)?;
    }

    #[test]
    fn moreau_dual_identity(xs in proptest::collection::vec(-2.0f64..2.0, 5), which in 0usize..5) {
        let cone = &families()[which];
        let d = cone.dim();
        let x = Vector::from_iterator(d, xs.iter().copied().cycle().take(d));
        let p = cone.project(&x).unwrap();
        let polar = cone.project_polar(&x).unwrap();
        prop_assert!((&p + &polar - &x).norm() < 1e-10);
        if let Some(dual) = cone.dual() {
            let a = cone.project_dual(&x).unwrap();
            let b = dual.project(&x).unwrap();
            prop_assert!((a - b).norm() < 1e-10);
        }
    }
}
