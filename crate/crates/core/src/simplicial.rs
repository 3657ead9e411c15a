//! Generalized simplicial cones `MK`: images of a symmetric cone `K` under a
//! dense linear map `M`.
//!
//! The projection of `x` onto `MK` is `M Π_K(z*)` where `z*` solves
//!
//! ```text
//! F(z) = (MᵀM − I) Π_K(z) + z − Mᵀx = 0,
//! ```
//!
//! the KKT system of `min ½‖Mz − x‖²` over `z ∈ K` written through Moreau's
//! decomposition. `F` is strongly semi-smooth and is solved here with the same
//! semi-smooth Newton kernel (pivoted LU, regularized normal equations,
//! Armijo backtracking) that drives the outer solver.

use alloc::boxed::Box;
use alloc::format;

#[allow(unused_imports)]
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cones::{Cone, JacobianElement};
use crate::error::{check_dim, Error, Result};
use crate::linalg::{
    psd_sqrt, rank_and_kernel, solve_pivoted, solve_regularized, sym_eigen, sym_pinv, symmetrize, Matrix, Vector,
};

/// Absolute-plus-relative tolerance on `‖F(z)‖`.
pub const INNER_TOL: f64 = 1e-10;
pub const INNER_MAXITER: usize = 100;
const INNER_MAXITER_LS: usize = 40;
const POLISH_STEPS: usize = 3;
const GRADIENT_MAXITER: usize = 20_000;
const INNER_ARMIJO: f64 = 1e-4;
const RANK_REL: f64 = 1e-12;
const SIGN_SAMPLES: usize = 64;

#[derive(Debug, Clone, PartialEq)]
pub struct SimplicialCone {
    map: Matrix,
    base: Box<Cone>,
    gram_minus_id: Matrix,
}

/// Outcome of one projection onto `MK`.
#[derive(Debug, Clone, PartialEq)]
pub struct SimplicialProjection {
    /// Solution of the projection equation, in base-cone space.
    pub z_star: Vector,
    /// `Π_K(z*)`, the minimizer of `½‖Mz − x‖²` over `K`.
    pub base_point: Vector,
    /// `M Π_K(z*)`, the reported projection.
    pub point: Vector,
    /// `‖M z* − M Π_K(z*)‖`; zero exactly when `z*` already lies in `K`.
    pub gap: f64,
    pub inner_residual: f64,
    pub inner_iterations: usize,
    pub warm_start_used: bool,
}

/// Sufficient-condition verdict on closedness of `MK`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Closedness {
    /// `M` has full column rank, so `Ker(M) ∩ K = {0}`.
    GuaranteedClosedTrivialKernel,
    /// A kernel vector lies in `int K`, so `MK = Im(M)`.
    GuaranteedClosedImageSpace,
    Unknown,
}

impl SimplicialCone {
    pub fn new(map: Matrix, base: Cone) -> Result<Self> {
        base.validate()?;
        if !base.is_symmetric() {
            return Err(Error::InvalidArgument(format!(
                "simplicial base must be a symmetric cone, got {base:?}"
            )));
        }
        check_dim("simplicial map columns", base.dim(), map.ncols())?;
        if map.nrows() == 0 {
            return Err(Error::InvalidArgument("simplicial map has no rows".into()));
        }
        let d = map.ncols();
        let gram_minus_id = map.tr_mul(&map) - Matrix::identity(d, d);
        Ok(Self {
            map,
            base: Box::new(base),
            gram_minus_id,
        })
    }

    pub fn validate(&self) -> Result<()> {
        self.base.validate()?;
        if !self.base.is_symmetric() || self.map.ncols() != self.base.dim() {
            return Err(Error::InvalidArgument("malformed simplicial cone".into()));
        }
        Ok(())
    }

    pub fn map(&self) -> &Matrix {
        &self.map
    }

    pub fn base(&self) -> &Cone {
        &self.base
    }

    pub fn out_dim(&self) -> usize {
        self.map.nrows()
    }

    pub fn base_dim(&self) -> usize {
        self.map.ncols()
    }

    fn equation(&self, z: &Vector, rhs: &Vector) -> Result<(Vector, Vector)> {
        let pz = self.base.project(z)?;
        let f = &self.gram_minus_id * &pz + z - rhs;
        Ok((f, pz))
    }

    /// Solves the projection equation for `x`, starting from `warm` when
    /// given and from `Mᵀx` otherwise. If Newton stalls, it restarts from an
    /// accelerated projected-gradient estimate of the minimizer.
    pub fn project(&self, x: &Vector, warm: Option<&Vector>) -> Result<SimplicialProjection> {
        check_dim("simplicial projection", self.out_dim(), x.len())?;
        let rhs = self.map.tr_mul(x);
        let z0 = match warm {
            Some(w) => {
                check_dim("simplicial warm start", self.base_dim(), w.len())?;
                w.clone()
            }
            None => rhs.clone(),
        };
        let tol = INNER_TOL * (1.0 + rhs.norm());
        let (z, pz, r, iterations) = match self.newton(z0, &rhs, tol) {
            Ok(v) => v,
            Err(_) => {
                let (z, pz, r, k) = self.newton(self.gradient_start(&rhs)?, &rhs, tol)?;
                (z, pz, r, k + INNER_MAXITER)
            }
        };
        let point = &self.map * &pz;
        let gap = (&self.map * &z - &point).norm();
        Ok(SimplicialProjection {
            z_star: z,
            base_point: pz,
            point,
            gap,
            inner_residual: r,
            inner_iterations: iterations,
            warm_start_used: warm.is_some(),
        })
    }

    fn newton(&self, mut z: Vector, rhs: &Vector, tol: f64) -> Result<(Vector, Vector, f64, usize)> {
        let d = self.base_dim();
        let (mut f, mut pz) = self.equation(&z, rhs)?;
        let mut theta = 0.5 * f.norm_squared();
        let mut iterations = 0;
        loop {
            let r = f.norm();
            if r <= tol {
                let (z, pz, r) = self.polish(z, pz, f, rhs)?;
                return Ok((z, pz, r, iterations));
            }
            if iterations >= INNER_MAXITER || !r.is_finite() {
                return Err(Error::ProjectionFailure {
                    residual: r,
                    iterations,
                });
            }
            let v = self.base.clarke_element(&z)?;
            let t = &self.gram_minus_id * v.matrix() + Matrix::identity(d, d);
            let grad = t.tr_mul(&f);
            let mut dir = solve_pivoted(&t, &(-&f), 1e-12, 1e-10);
            if let Some(dz) = &dir {
                if !(grad.dot(dz) < 0.0) {
                    dir = None;
                }
            }
            let dz = match dir {
                Some(dz) => dz,
                None => {
                    if grad.norm() == 0.0 {
                        return Err(Error::ProjectionFailure {
                            residual: r,
                            iterations,
                        });
                    }
                    -solve_regularized(&t, theta.sqrt(), &grad)
                }
            };
            let slope = grad.dot(&dz);
            let mut alpha = 1.0;
            let mut trial = &z + &dz;
            let (mut tf, mut tp) = self.equation(&trial, rhs)?;
            let mut ls = 0;
            while !(0.5 * tf.norm_squared() <= theta + INNER_ARMIJO * alpha * slope) && ls < INNER_MAXITER_LS {
                alpha *= 0.5;
                ls += 1;
                trial = &z + &dz * alpha;
                let e = self.equation(&trial, rhs)?;
                tf = e.0;
                tp = e.1;
            }
            z = trial;
            f = tf;
            pz = tp;
            theta = 0.5 * f.norm_squared();
            iterations += 1;
        }
    }

    /// `u − Mᵀ(Mu − x)` at a minimizer `u` of `½‖Mu − x‖²` over `K` found by
    /// projected gradient with Nesterov momentum and objective restarts.
    fn gradient_start(&self, rhs: &Vector) -> Result<Vector> {
        let d = self.base_dim();
        let gram = &self.gram_minus_id + Matrix::identity(d, d);
        let lip = sym_eigen(&gram).eigenvalues.max().max(f64::MIN_POSITIVE);
        let objective = |u: &Vector| 0.5 * u.dot(&(&gram * u)) - rhs.dot(u);
        let mut u = self.base.project(&(rhs / lip))?;
        let mut y = u.clone();
        let mut t = 1.0;
        let mut value = objective(&u);
        for _ in 0..GRADIENT_MAXITER {
            let g = &gram * &y - rhs;
            let next = self.base.project(&(&y - g / lip))?;
            let next_value = objective(&next);
            if next_value > value {
                y = u.clone();
                t = 1.0;
                continue;
            }
            let step = (&next - &u).norm();
            let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
            y = &next + (&next - &u) * ((t - 1.0) / t_next);
            t = t_next;
            u = next;
            value = next_value;
            if step <= 1e-15 * (1.0 + u.norm()) {
                break;
            }
        }
        Ok(&u - (&gram * &u - rhs))
    }

    /// Unit minimum-norm Newton steps past the tolerance, kept while the
    /// residual drops.
    fn polish(&self, mut z: Vector, mut pz: Vector, mut f: Vector, rhs: &Vector) -> Result<(Vector, Vector, f64)> {
        let d = self.base_dim();
        for _ in 0..POLISH_STEPS {
            let v = self.base.clarke_element(&z)?;
            let t = &self.gram_minus_id * v.matrix() + Matrix::identity(d, d);
            let Ok(dz) = t.svd(true, true).solve(&(-&f), 1e-12 * (1.0 + self.gram_minus_id.norm())) else {
                break;
            };
            let trial = &z + dz;
            let (tf, tp) = self.equation(&trial, rhs)?;
            if !(tf.norm() < f.norm()) {
                break;
            }
            z = trial;
            f = tf;
            pz = tp;
        }
        let r = f.norm();
        Ok((z, pz, r))
    }

    /// Clarke element of `Π_{MK}` at `x`: with `V = V_K(z*)` and
    /// `B = M V^{1/2}`, returns `B (I − V + BᵀB)⁺ Bᵀ`. When
    /// `T = (MᵀM − I)V + I` is invertible this equals `M V T⁻¹ Mᵀ`, the
    /// implicit-function derivative of `x ↦ M Π_K(z*(x))`.
    pub fn clarke_element(&self, x: &Vector, warm: Option<&Vector>) -> Result<JacobianElement> {
        let proj = self.project(x, warm)?;
        Ok(self.clarke_element_at(&proj.z_star)?)
    }

    pub fn clarke_element_at(&self, z_star: &Vector) -> Result<JacobianElement> {
        let d = self.base_dim();
        let v = self.base.clarke_element(z_star)?.into_matrix();
        let root = psd_sqrt(&v);
        let b = &self.map * &root;
        let s = Matrix::identity(d, d) - &v + b.tr_mul(&b);
        let inner = sym_pinv(&s, 1e-12);
        Ok(JacobianElement(symmetrize(&(&b * inner * b.transpose()))))
    }
}

/// Projects `x` onto `MK`; convenience wrapper over [`SimplicialCone::project`].
pub fn simplicial_project(
    map: &Matrix,
    base: &Cone,
    x: &Vector,
    warm: Option<&Vector>,
) -> Result<SimplicialProjection> {
    SimplicialCone::new(map.clone(), base.clone())?.project(x, warm)
}

/// Tests `z ∈ (MK)*` through `Mᵀz ∈ K*`. Requires `M` of full column rank.
pub fn dual_membership(map: &Matrix, base: &Cone, z: &Vector) -> Result<bool> {
    check_dim("dual membership map columns", base.dim(), map.ncols())?;
    check_dim("dual membership point", map.nrows(), z.len())?;
    let (rank, _) = rank_and_kernel(map, RANK_REL);
    if rank < map.ncols() {
        return Err(Error::Unsupported(format!(
            "map has rank {rank} < {} columns; test (MK)* membership through Moreau's identity instead",
            map.ncols()
        )));
    }
    base.dual_contains(&map.tr_mul(z), 1e-10)
}

/// Checks the two sufficient conditions for closedness of `MK`. Never claims
/// closedness that it has not certified.
pub fn closedness_diagnostic(map: &Matrix, base: &Cone) -> Closedness {
    if map.ncols() != base.dim() {
        return Closedness::Unknown;
    }
    let (rank, kernel) = rank_and_kernel(map, RANK_REL);
    if rank == map.ncols() {
        return Closedness::GuaranteedClosedTrivialKernel;
    }
    let k = kernel.ncols();
    let centroid: Vector = kernel.column_sum();
    if base.strictly_contains(&centroid) || base.strictly_contains(&(-&centroid)) {
        return Closedness::GuaranteedClosedImageSpace;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_c10e);
    for _ in 0..SIGN_SAMPLES {
        let mut cand = Vector::zeros(map.ncols());
        for c in 0..k {
            let s = if rng.random::<bool>() { 1.0 } else { -1.0 };
            cand += kernel.column(c) * s;
        }
        if base.strictly_contains(&cand) || base.strictly_contains(&(-&cand)) {
            return Closedness::GuaranteedClosedImageSpace;
        }
    }
    Closedness::Unknown
}
