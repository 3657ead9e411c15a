//! Nonlinear conic programs `min f(x) s.t. g(x) ∈ K` and their conic
//! projection equations
//!
//! ```text
//! H(x, λ) = ( ∇f(x) − Dg(x)* Π_{K*}(λ) ,  g(x) − Π_{K*}(λ) + λ ) = 0.
//! ```
//!
//! Zeros of `H` are exactly the KKT points `(x, Π_{K*}(λ))`; conversely a KKT
//! pair `(x, σ)` gives a zero at `λ = σ − g(x)`. The semi-smooth Newton solver
//! only sees the [`ResidualSystem`] trait, which both the plain system and the
//! reduced double-cone system implement.

use alloc::vec::Vec;

use crate::cones::Cone;
use crate::error::{check_dim, Error, Result};
use crate::linalg::{Matrix, Vector};

/// Smooth data of a conic program: objective, constraint map and their
/// derivatives, all supplied analytically.
pub trait SmoothModel {
    fn x_dim(&self) -> usize;
    fn g_dim(&self) -> usize;
    fn objective(&self, x: &Vector) -> f64;
    fn gradient(&self, x: &Vector) -> Vector;
    fn hessian(&self, x: &Vector) -> Matrix;
    fn constraint(&self, x: &Vector) -> Vector;
    /// `Dg(x) dx`.
    fn constraint_apply(&self, x: &Vector, dx: &Vector) -> Vector;
    /// `Dg(x)* w`.
    fn constraint_adjoint(&self, x: &Vector, w: &Vector) -> Vector;
    /// `(D²g(x))* w`: the Hessian of `x ↦ ⟨w, g(x)⟩`.
    fn constraint_curvature(&self, x: &Vector, w: &Vector) -> Matrix;

    /// Matrix of `Dg(x)`, assembled column by column unless overridden.
    fn constraint_jacobian(&self, x: &Vector) -> Matrix {
        let n = self.x_dim();
        let mut j = Matrix::zeros(self.g_dim(), n);
        let mut e = Vector::zeros(n);
        for c in 0..n {
            e[c] = 1.0;
            j.set_column(c, &self.constraint_apply(x, &e));
            e[c] = 0.0;
        }
        j
    }
}

impl<M: SmoothModel + ?Sized> SmoothModel for &M {
    fn x_dim(&self) -> usize {
        (**self).x_dim()
    }
    fn g_dim(&self) -> usize {
        (**self).g_dim()
    }
    fn objective(&self, x: &Vector) -> f64 {
        (**self).objective(x)
    }
    fn gradient(&self, x: &Vector) -> Vector {
        (**self).gradient(x)
    }
    fn hessian(&self, x: &Vector) -> Matrix {
        (**self).hessian(x)
    }
    fn constraint(&self, x: &Vector) -> Vector {
        (**self).constraint(x)
    }
    fn constraint_apply(&self, x: &Vector, dx: &Vector) -> Vector {
        (**self).constraint_apply(x, dx)
    }
    fn constraint_adjoint(&self, x: &Vector, w: &Vector) -> Vector {
        (**self).constraint_adjoint(x, w)
    }
    fn constraint_curvature(&self, x: &Vector, w: &Vector) -> Matrix {
        (**self).constraint_curvature(x, w)
    }
    fn constraint_jacobian(&self, x: &Vector) -> Matrix {
        (**self).constraint_jacobian(x)
    }
}

/// A primal-dual point with its cached projection and residual.
#[derive(Debug, Clone, PartialEq)]
pub struct Iterate {
    pub x: Vector,
    pub lambda: Vector,
    /// `Π_{K*}(λ)`.
    pub sigma: Vector,
    pub h: Vector,
    pub theta: f64,
}

impl Iterate {
    pub fn residual_norm(&self) -> f64 {
        self.h.norm()
    }

    /// `(x, λ)` stacked.
    pub fn stacked(&self) -> Vector {
        let n = self.x.len();
        let mut z = Vector::zeros(n + self.lambda.len());
        z.rows_mut(0, n).copy_from(&self.x);
        z.rows_mut(n, self.lambda.len()).copy_from(&self.lambda);
        z
    }
}

/// First-order optimality residuals of a candidate KKT pair `(x, σ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KktCertificate {
    /// `‖∇f(x) − Dg(x)*σ‖`.
    pub stationarity: f64,
    /// `‖g(x) − Π_K(g(x))‖`.
    pub primal_infeasibility: f64,
    /// `‖σ − Π_{K*}(σ)‖`.
    pub dual_infeasibility: f64,
    /// `|⟨σ, g(x)⟩|`.
    pub complementarity: f64,
}

impl KktCertificate {
    pub fn worst(&self) -> f64 {
        self.stationarity
            .max(self.primal_infeasibility)
            .max(self.dual_infeasibility)
            .max(self.complementarity)
    }

    pub fn passes(&self, tol: f64) -> bool {
        self.worst() <= tol
    }
}

/// A residual map in the block form the semi-smooth Newton method expects:
/// unknowns `(x, λ)`, the first `primal_dim` rows of `H` are the optimality
/// block and the remaining `dual_dim` rows the feasibility block.
pub trait ResidualSystem {
    fn primal_dim(&self) -> usize;
    fn dual_dim(&self) -> usize;
    fn evaluate(&self, x: Vector, lambda: Vector) -> Result<Iterate>;
    /// Element of the generalized Jacobian of `H` at the iterate; the
    /// projection Jacobian element is computed once per call.
    fn jacobian(&self, it: &Iterate) -> Result<Matrix>;
    fn certificate(&self, it: &Iterate) -> Result<KktCertificate>;

    fn dim(&self) -> usize {
        self.primal_dim() + self.dual_dim()
    }

    /// Evaluates at a stacked point.
    fn evaluate_stacked(&self, z: &Vector) -> Result<Iterate> {
        check_dim("stacked iterate", self.dim(), z.len())?;
        let n = self.primal_dim();
        self.evaluate(z.rows(0, n).into_owned(), z.rows(n, self.dual_dim()).into_owned())
    }
}

/// `∇θ = J_Hᵀ H` for `θ = ½‖H‖²`.
pub fn grad_theta(jacobian: &Matrix, it: &Iterate) -> Vector {
    jacobian.tr_mul(&it.h)
}

/// `θ = ½‖H‖²`.
pub fn merit_theta(it: &Iterate) -> f64 {
    it.theta
}

/// Optimality/feasibility split of `H` and of `∇θ`.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitResidual {
    pub h_opt: Vector,
    pub h_feas: Vector,
    pub grad_opt: Vector,
    pub grad_feas: Vector,
}

impl SplitResidual {
    pub fn theta_opt(&self) -> f64 {
        0.5 * self.h_opt.norm_squared()
    }

    pub fn theta_feas(&self) -> f64 {
        0.5 * self.h_feas.norm_squared()
    }
}

pub fn split_with_jacobian(primal_dim: usize, it: &Iterate, jacobian: &Matrix) -> SplitResidual {
    let total = it.h.len();
    let dual_dim = total - primal_dim;
    let h_opt = it.h.rows(0, primal_dim).into_owned();
    let h_feas = it.h.rows(primal_dim, dual_dim).into_owned();
    let grad_opt = jacobian.rows(0, primal_dim).tr_mul(&h_opt);
    let grad_feas = jacobian.rows(primal_dim, dual_dim).tr_mul(&h_feas);
    SplitResidual {
        h_opt,
        h_feas,
        grad_opt,
        grad_feas,
    }
}

pub fn split_residual<S: ResidualSystem + ?Sized>(sys: &S, it: &Iterate) -> Result<SplitResidual> {
    let j = sys.jacobian(it)?;
    Ok(split_with_jacobian(sys.primal_dim(), it, &j))
}

/// `θ^feas = ½‖H^feas‖²` at a stacked point, for feasibility linesearches.
pub fn theta_feas(primal_dim: usize, it: &Iterate) -> f64 {
    0.5 * it.h.rows(primal_dim, it.h.len() - primal_dim).norm_squared()
}

/// `min f(x) s.t. g(x) ∈ K`.
#[derive(Debug, Clone)]
pub struct NcpProblem<M> {
    pub model: M,
    pub cone: Cone,
}

/// A KKT pair recovered from a zero (or near-zero) of `H`.
#[derive(Debug, Clone, PartialEq)]
pub struct KktPoint {
    pub x: Vector,
    pub sigma: Vector,
    pub certificate: KktCertificate,
}

impl<M: SmoothModel> NcpProblem<M> {
    pub fn new(model: M, cone: Cone) -> Result<Self> {
        cone.validate()?;
        check_dim("constraint cone", model.g_dim(), cone.dim())?;
        Ok(Self { model, cone })
    }

    fn check_point(&self, x: &Vector, lambda: &Vector) -> Result<()> {
        check_dim("primal point", self.model.x_dim(), x.len())?;
        check_dim("multiplier", self.cone.dim(), lambda.len())
    }

    /// `H(x, λ)`.
    pub fn residual(&self, x: &Vector, lambda: &Vector) -> Result<Vector> {
        Ok(self.evaluate(x.clone(), lambda.clone())?.h)
    }

    /// Certificate for a candidate pair `(x, σ)` straight from the KKT
    /// definitions.
    pub fn certificate_for(&self, x: &Vector, sigma: &Vector) -> Result<KktCertificate> {
        self.check_point(x, sigma)?;
        let g = self.model.constraint(x);
        let stat = self.model.gradient(x) - self.model.constraint_adjoint(x, sigma);
        Ok(KktCertificate {
            stationarity: stat.norm(),
            primal_infeasibility: (&g - self.cone.project(&g)?).norm(),
            dual_infeasibility: (sigma - self.cone.project_dual(sigma)?).norm(),
            complementarity: sigma.dot(&g).abs(),
        })
    }

    /// Maps a solution of the projection equations to the KKT pair
    /// `(x, Π_{K*}(λ))` and certifies it.
    pub fn recover_kkt(&self, x: &Vector, lambda: &Vector) -> Result<KktPoint> {
        self.check_point(x, lambda)?;
        let sigma = self.cone.project_dual(lambda)?;
        let certificate = self.certificate_for(x, &sigma)?;
        Ok(KktPoint {
            x: x.clone(),
            sigma,
            certificate,
        })
    }

    /// The converse map: a KKT pair `(x, σ)` becomes `λ = σ − g(x)`.
    pub fn embed_multiplier(&self, x: &Vector, sigma: &Vector) -> Result<Vector> {
        self.check_point(x, sigma)?;
        Ok(sigma - self.model.constraint(x))
    }
}

impl<M: SmoothModel> ResidualSystem for NcpProblem<M> {
    fn primal_dim(&self) -> usize {
        self.model.x_dim()
    }

    fn dual_dim(&self) -> usize {
        self.cone.dim()
    }

    fn evaluate(&self, x: Vector, lambda: Vector) -> Result<Iterate> {
        self.check_point(&x, &lambda)?;
        let n = x.len();
        let m = lambda.len();
        let sigma = self.cone.project_dual(&lambda)?;
        let opt = self.model.gradient(&x) - self.model.constraint_adjoint(&x, &sigma);
        let feas = self.model.constraint(&x) - &sigma + &lambda;
        let mut h = Vector::zeros(n + m);
        h.rows_mut(0, n).copy_from(&opt);
        h.rows_mut(n, m).copy_from(&feas);
        let theta = 0.5 * h.norm_squared();
        Ok(Iterate {
            x,
            lambda,
            sigma,
            h,
            theta,
        })
    }

    fn jacobian(&self, it: &Iterate) -> Result<Matrix> {
        let n = self.model.x_dim();
        let m = self.cone.dim();
        let w = self.cone.clarke_element_dual(&it.lambda)?.into_matrix();
        let dg = self.model.constraint_jacobian(&it.x);
        let top_left = self.model.hessian(&it.x) - self.model.constraint_curvature(&it.x, &it.sigma);
        let mut j = Matrix::zeros(n + m, n + m);
        j.view_mut((0, 0), (n, n)).copy_from(&top_left);
        j.view_mut((0, n), (n, m)).copy_from(&(-(dg.transpose() * &w)));
        j.view_mut((n, 0), (m, n)).copy_from(&dg);
        j.view_mut((n, n), (m, m)).copy_from(&(Matrix::identity(m, m) - w));
        Ok(j)
    }

    fn certificate(&self, it: &Iterate) -> Result<KktCertificate> {
        self.certificate_for(&it.x, &it.sigma)
    }
}

/// For `g = Id`: the single-equation form `∇f(Π_K(y)) − Π_K(y) + y` of the
/// projection equations, with `y = −λ`.
pub fn identity_equation_residual<M: SmoothModel>(problem: &NcpProblem<M>, y: &Vector) -> Result<Vector> {
    if problem.model.x_dim() != problem.model.g_dim() {
        return Err(Error::InvalidArgument("identity reduction needs g = Id".into()));
    }
    let p = problem.cone.project(y)?;
    Ok(problem.model.gradient(&p) - &p + y)
}

/// `min f(x) s.t. g(x) ∈ K, x ∈ C` in the reduced variables `(y, σ)`:
///
/// ```text
/// ∇f(Π_C(y)) − Dg(Π_C(y))* Π_{K*}(σ) − Π_C(y) + y = 0
/// g(Π_C(y)) − Π_{K*}(σ) + σ = 0
/// ```
///
/// with KKT points recovered as `(Π_C(ȳ), Π_{K*}(σ̄))`.
#[derive(Debug, Clone)]
pub struct ReducedProblem<M> {
    pub model: M,
    /// Constraint cone `K` of `g(x)`.
    pub cone: Cone,
    /// Cone `C` imposed directly on `x`.
    pub primal_cone: Cone,
}

/// Builds the reduced system of a doubly conic program.
pub fn reduce_double_cone<M: SmoothModel>(model: M, primal_cone: Cone, cone: Cone) -> Result<ReducedProblem<M>> {
    primal_cone.validate()?;
    cone.validate()?;
    check_dim("primal cone", model.x_dim(), primal_cone.dim())?;
    check_dim("constraint cone", model.g_dim(), cone.dim())?;
    Ok(ReducedProblem {
        model,
        cone,
        primal_cone,
    })
}

/// KKT data of a doubly conic program: the primal point, the multiplier of
/// `g(x) ∈ K` and the multiplier of `x ∈ C`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedKkt {
    pub x: Vector,
    pub sigma: Vector,
    pub mu: Vector,
    pub certificate: KktCertificate,
}

/// `ĝ(x) = (x, g(x))`, the lifting that turns `x ∈ C` into a constraint.
#[derive(Debug, Clone, Copy)]
pub struct Lifted<'a, M> {
    inner: &'a M,
}

impl<M: SmoothModel> SmoothModel for Lifted<'_, M> {
    fn x_dim(&self) -> usize {
        self.inner.x_dim()
    }
    fn g_dim(&self) -> usize {
        self.inner.x_dim() + self.inner.g_dim()
    }
    fn objective(&self, x: &Vector) -> f64 {
        self.inner.objective(x)
    }
    fn gradient(&self, x: &Vector) -> Vector {
        self.inner.gradient(x)
    }
    fn hessian(&self, x: &Vector) -> Matrix {
        self.inner.hessian(x)
    }
    fn constraint(&self, x: &Vector) -> Vector {
        stack(x, &self.inner.constraint(x))
    }
    fn constraint_apply(&self, x: &Vector, dx: &Vector) -> Vector {
        stack(dx, &self.inner.constraint_apply(x, dx))
    }
    fn constraint_adjoint(&self, x: &Vector, w: &Vector) -> Vector {
        let n = self.inner.x_dim();
        let wk = w.rows(n, w.len() - n).into_owned();
        w.rows(0, n) + self.inner.constraint_adjoint(x, &wk)
    }
    fn constraint_curvature(&self, x: &Vector, w: &Vector) -> Matrix {
        let n = self.inner.x_dim();
        self.inner.constraint_curvature(x, &w.rows(n, w.len() - n).into_owned())
    }
    fn constraint_jacobian(&self, x: &Vector) -> Matrix {
        let n = self.inner.x_dim();
        let m = self.inner.g_dim();
        let mut j = Matrix::zeros(n + m, n);
        j.view_mut((0, 0), (n, n)).fill_with_identity();
        j.view_mut((n, 0), (m, n)).copy_from(&self.inner.constraint_jacobian(x));
        j
    }
}

pub(crate) fn stack(a: &Vector, b: &Vector) -> Vector {
    let mut z = Vector::zeros(a.len() + b.len());
    z.rows_mut(0, a.len()).copy_from(a);
    z.rows_mut(a.len(), b.len()).copy_from(b);
    z
}

impl<M: SmoothModel> ReducedProblem<M> {
    /// The equivalent single-cone program with `ĝ(x) = (x, g(x)) ∈ C × K`.
    pub fn lift(&self) -> NcpProblem<Lifted<'_, M>> {
        NcpProblem {
            model: Lifted { inner: &self.model },
            cone: Cone::Product(alloc::vec![self.primal_cone.clone(), self.cone.clone()]),
        }
    }

    /// Recovers `(x̄, σ̄, μ̄) = (Π_C(y), Π_{K*}(σ), Π_{C*}(−y))` and certifies
    /// it against the lifted program.
    pub fn recover_kkt(&self, y: &Vector, sigma: &Vector) -> Result<ReducedKkt> {
        let x = self.primal_cone.project(y)?;
        let sig = self.cone.project_dual(sigma)?;
        let mu = &x - y;
        let certificate = self.lift().certificate_for(&x, &stack(&mu, &sig))?;
        Ok(ReducedKkt {
            x,
            sigma: sig,
            mu,
            certificate,
        })
    }

    /// Multiplier of the lifted program from a KKT triple via `λ = σ̂ − ĝ(x)`.
    pub fn embed_multiplier(&self, kkt: &ReducedKkt) -> Result<Vector> {
        self.lift().embed_multiplier(&kkt.x, &stack(&kkt.mu, &kkt.sigma))
    }
}

impl<M: SmoothModel> ResidualSystem for ReducedProblem<M> {
    fn primal_dim(&self) -> usize {
        self.model.x_dim()
    }

    fn dual_dim(&self) -> usize {
        self.cone.dim()
    }

    fn evaluate(&self, y: Vector, lambda: Vector) -> Result<Iterate> {
        check_dim("reduced primal point", self.model.x_dim(), y.len())?;
        check_dim("reduced multiplier", self.cone.dim(), lambda.len())?;
        let x = self.primal_cone.project(&y)?;
        let sigma = self.cone.project_dual(&lambda)?;
        let opt = self.model.gradient(&x) - self.model.constraint_adjoint(&x, &sigma) - &x + &y;
        let feas = self.model.constraint(&x) - &sigma + &lambda;
        let h = stack(&opt, &feas);
        let theta = 0.5 * h.norm_squared();
        Ok(Iterate {
            x: y,
            lambda,
            sigma,
            h,
            theta,
        })
    }

    fn jacobian(&self, it: &Iterate) -> Result<Matrix> {
        let n = self.model.x_dim();
        let m = self.cone.dim();
        let vc = self.primal_cone.clarke_element(&it.x)?.into_matrix();
        let w = self.cone.clarke_element_dual(&it.lambda)?.into_matrix();
        let x = self.primal_cone.project(&it.x)?;
        let dg = self.model.constraint_jacobian(&x);
        let curv = self.model.hessian(&x) - self.model.constraint_curvature(&x, &it.sigma);
        let mut top_left = curv * &vc - &vc;
        for i in 0..n {
            top_left[(i, i)] += 1.0;
        }
        let mut j = Matrix::zeros(n + m, n + m);
        j.view_mut((0, 0), (n, n)).copy_from(&top_left);
        j.view_mut((0, n), (n, m)).copy_from(&(-(dg.transpose() * &w)));
        j.view_mut((n, 0), (m, n)).copy_from(&(dg * vc));
        j.view_mut((n, n), (m, m)).copy_from(&(Matrix::identity(m, m) - w));
        Ok(j)
    }

    fn certificate(&self, it: &Iterate) -> Result<KktCertificate> {
        Ok(self.recover_kkt(&it.x, &it.lambda)?.certificate)
    }
}

/// Maximum discrepancies between analytic and central-difference derivatives
/// of a [`SmoothModel`], each relative to `max(1, scale)` of the analytic
/// quantity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivativeCheck {
    pub gradient: f64,
    pub hessian: f64,
    pub constraint_apply: f64,
    pub adjoint: f64,
    pub curvature: f64,
}

impl DerivativeCheck {
    pub fn worst(&self) -> f64 {
        self.gradient
            .max(self.hessian)
            .max(self.constraint_apply)
            .max(self.adjoint)
            .max(self.curvature)
    }
}

fn rel_err(a: &Vector, b: &Vector) -> f64 {
    (a - b).norm() / a.norm().max(1.0)
}

/// Compares the analytic callbacks at `x` with central differences of step
/// `step` along `dx`, and tests the adjoint identity against `w`.
pub fn check_derivatives<M: SmoothModel>(model: &M, x: &Vector, dx: &Vector, w: &Vector, step: f64) -> DerivativeCheck {
    let xp = x + dx * step;
    let xm = x - dx * step;
    let fd_f = (model.objective(&xp) - model.objective(&xm)) / (2.0 * step);
    let g = model.gradient(x);
    let gradient = (fd_f - g.dot(dx)).abs() / g.dot(dx).abs().max(1.0);
    let fd_grad = (model.gradient(&xp) - model.gradient(&xm)) / (2.0 * step);
    let hessian = rel_err(&(model.hessian(x) * dx), &fd_grad);
    let fd_g = (model.constraint(&xp) - model.constraint(&xm)) / (2.0 * step);
    let jdx = model.constraint_apply(x, dx);
    let constraint_apply = rel_err(&jdx, &fd_g);
    let adj = model.constraint_adjoint(x, w);
    let adjoint = (jdx.dot(w) - dx.dot(&adj)).abs() / jdx.dot(w).abs().max(1.0);
    let fd_adj = (model.constraint_adjoint(&xp, w) - model.constraint_adjoint(&xm, w)) / (2.0 * step);
    let curvature = rel_err(&(model.constraint_curvature(x, w) * dx), &fd_adj);
    DerivativeCheck {
        gradient,
        hessian,
        constraint_apply,
        adjoint,
        curvature,
    }
}

/// Central-difference Jacobian of a residual system at a stacked point.
pub fn finite_difference_jacobian<S: ResidualSystem + ?Sized>(sys: &S, z: &Vector, step: f64) -> Result<Matrix> {
    let n = sys.dim();
    let mut j = Matrix::zeros(n, n);
    let mut cols: Vec<Vector> = Vec::with_capacity(n);
    for c in 0..n {
        let mut zp = z.clone();
        let mut zm = z.clone();
        zp[c] += step;
        zm[c] -= step;
        let hp = sys.evaluate_stacked(&zp)?.h;
        let hm = sys.evaluate_stacked(&zm)?.h;
        cols.push((hp - hm) / (2.0 * step));
    }
    for (c, col) in cols.iter().enumerate() {
        j.set_column(c, col);
    }
    Ok(j)
}
