//! Linear programs over a circular cone: `min cᵀx s.t. Ax = b, x ∈ 𝕃_ω`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::cones::Cone;
use crate::error::{check_dim, Error, Result};
use crate::linalg::{Matrix, Vector};
use crate::ncp::{reduce_double_cone, ReducedProblem, SmoothModel};

/// `f(x) = cᵀx`, `g(x) = Ax − b`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    pub c: Vector,
    pub a: Matrix,
    pub b: Vector,
}

impl SmoothModel for LinearModel {
    fn x_dim(&self) -> usize {
        self.c.len()
    }
    fn g_dim(&self) -> usize {
        self.b.len()
    }
    fn objective(&self, x: &Vector) -> f64 {
        self.c.dot(x)
    }
    fn gradient(&self, _x: &Vector) -> Vector {
        self.c.clone()
    }
    fn hessian(&self, _x: &Vector) -> Matrix {
        Matrix::zeros(self.c.len(), self.c.len())
    }
    fn constraint(&self, x: &Vector) -> Vector {
        &self.a * x - &self.b
    }
    fn constraint_apply(&self, _x: &Vector, dx: &Vector) -> Vector {
        &self.a * dx
    }
    fn constraint_adjoint(&self, _x: &Vector, w: &Vector) -> Vector {
        self.a.tr_mul(w)
    }
    fn constraint_curvature(&self, _x: &Vector, _w: &Vector) -> Matrix {
        Matrix::zeros(self.c.len(), self.c.len())
    }
    fn constraint_jacobian(&self, _x: &Vector) -> Matrix {
        self.a.clone()
    }
}

/// A seeded circular-cone LP together with the planted strictly feasible
/// primal point `x̂` and dual certificate `(y₀, s)` with `c = Aᵀy₀ + s`.
#[derive(Debug, Clone, PartialEq)]
pub struct CircularConeInstance {
    pub n: usize,
    pub m: usize,
    pub omega: f64,
    pub a: Matrix,
    pub b: Vector,
    pub c: Vector,
    pub seed: u64,
    pub planted_x: Vector,
    pub planted_y: Vector,
    pub planted_slack: Vector,
}

impl CircularConeInstance {
    pub fn validate(&self) -> Result<()> {
        check_dim("circular instance c", self.n, self.c.len())?;
        check_dim("circular instance b", self.m, self.b.len())?;
        check_dim("circular instance rows", self.m, self.a.nrows())?;
        check_dim("circular instance cols", self.n, self.a.ncols())?;
        Cone::circular(self.n, self.omega).map(|_| ())
    }

    pub fn model(&self) -> LinearModel {
        LinearModel {
            c: self.c.clone(),
            a: self.a.clone(),
            b: self.b.clone(),
        }
    }
}

fn random_direction(rng: &mut ChaCha8Rng, len: usize, radius: f64) -> Vector {
    if len == 0 {
        return Vector::zeros(0);
    }
    loop {
        let v = Vector::from_fn(len, |_, _| StandardNormal.sample(rng));
        let norm = v.norm();
        if norm > 1e-12 {
            return v * (radius / norm);
        }
    }
}

/// Seeded instance with orthonormal rows in `A`, `b = Ax̂` for
/// `x̂ = (1, u)`, `‖u‖ = ½ tan ω`, and `c = Aᵀy₀ + s` for `s = (1, v)`,
/// `‖v‖ = ½ cot ω`.
pub fn generate_circular(n: usize, m: usize, omega: f64, seed: u64) -> Result<CircularConeInstance> {
    if n < 2 || m >= n {
        return Err(Error::InvalidArgument(alloc::format!(
            "circular instance needs 2 <= n and m < n, got n = {n}, m = {m}"
        )));
    }
    Cone::circular(n, omega)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let raw = Matrix::from_fn(m, n, |_, _| StandardNormal.sample(&mut rng));
    let a = raw.transpose().qr().q().transpose();
    let (t, cot) = crate::cones::circular_slopes(omega);
    let mut planted_x = Vector::zeros(n);
    planted_x[0] = 1.0;
    planted_x
        .rows_mut(1, n - 1)
        .copy_from(&random_direction(&mut rng, n - 1, 0.5 * t));
    let b = &a * &planted_x;
    let planted_y = Vector::from_fn(m, |_, _| StandardNormal.sample(&mut rng));
    let mut planted_slack = Vector::zeros(n);
    planted_slack[0] = 1.0;
    planted_slack
        .rows_mut(1, n - 1)
        .copy_from(&random_direction(&mut rng, n - 1, 0.5 * cot));
    let c = a.tr_mul(&planted_y) + &planted_slack;
    Ok(CircularConeInstance {
        n,
        m,
        omega,
        a,
        b,
        c,
        seed,
        planted_x,
        planted_y,
        planted_slack,
    })
}

/// The reduced system in `(y, σ)`:
/// `c − Aᵀσ + y − Π_{𝕃_ω}(y) = 0`, `AΠ_{𝕃_ω}(y) − b = 0`.
pub fn build_circular(instance: &CircularConeInstance) -> Result<ReducedProblem<LinearModel>> {
    instance.validate()?;
    reduce_double_cone(
        instance.model(),
        Cone::circular(instance.n, instance.omega)?,
        Cone::Zero(instance.m),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn planted_points_are_strictly_feasible() {
        let inst = generate_circular(12, 3, core::f64::consts::PI / 6.0, 7).unwrap();
        assert!((&inst.a * &inst.planted_x - &inst.b).norm() < 1e-14);
        let cone = Cone::circular(12, inst.omega).unwrap();
        assert!(cone.strictly_contains(&inst.planted_x));
        let u = inst.planted_slack.rows(1, 11).norm();
        assert!(u < inst.planted_slack[0] * (1.0 / inst.omega.tan()));
        let gram = &inst.a * inst.a.transpose();
        assert!((gram - Matrix::identity(3, 3)).norm() < 1e-12);
    }

    #[test]
    fn same_seed_same_instance() {
        let a = generate_circular(8, 2, 0.4, 3).unwrap();
        let b = generate_circular(8, 2, 0.4, 3).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_m_not_below_n() {
        assert!(generate_circular(4, 4, 0.5, 0).is_err());
    }
}
