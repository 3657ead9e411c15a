//! Projections onto closed convex cones and elements of their Clarke
//! generalized Jacobians.
//!
//! Every cone here is closed and convex, so `Π_K` is single valued and
//! nonexpansive. Dual projections go through Moreau's identity
//! `Π_{K*}(y) = y + Π_K(−y)`, which keeps one projection routine per family.

use alloc::boxed::Box;
use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::FRAC_PI_2;
use core::f64::consts::FRAC_PI_4;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{check_dim, Error, Result};
use crate::linalg::{smat, svec, svec_len, sym_eigen, Matrix, Vector};
use crate::simplicial::SimplicialCone;

/// Algebraic description of a closed convex cone.
#[derive(Debug, Clone, PartialEq)]
pub enum Cone {
    /// The origin `{0} ⊂ Rⁿ`; its dual is the whole space.
    Zero(usize),
    /// The whole space `Rⁿ`; its dual is `{0}`.
    Free(usize),
    /// `Rⁿ₊`.
    Nonneg(usize),
    /// `{(x₁, u) : ‖u‖ ≤ x₁}`; dimension one is the half-line.
    SecondOrder(usize),
    /// `{(x₁, u) : ‖u‖ ≤ x₁ tan ω}` with half-aperture `ω ∈ (0, π/2)`.
    Circular { dim: usize, omega: f64 },
    /// Positive semidefinite matrices of the given order, in `svec` form.
    Psd(usize),
    /// Cartesian product, blocks in order.
    Product(Vec<Cone>),
    /// Image `MK` of a symmetric cone under a dense linear map.
    Simplicial(SimplicialCone),
}

/// An element `V_K(y)` of the Clarke generalized Jacobian of `Π_K` at `y`.
///
/// Always a symmetric matrix of the ambient dimension with spectrum in
/// `[0, 1]`, satisfying `V_K(y) y = Π_K(y)`.
#[derive(Debug, Clone, PartialEq)]
pub struct JacobianElement(pub Matrix);

impl JacobianElement {
    pub fn identity(n: usize) -> Self {
        Self(Matrix::identity(n, n))
    }

    pub fn zeros(n: usize) -> Self {
        Self(Matrix::zeros(n, n))
    }

    pub fn matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn into_matrix(self) -> Matrix {
        self.0
    }

    pub fn apply(&self, v: &Vector) -> Vector {
        &self.0 * v
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }
}

impl Cone {
    pub fn circular(dim: usize, omega: f64) -> Result<Self> {
        let c = Cone::Circular { dim, omega };
        c.validate()?;
        Ok(c)
    }

    pub fn product(parts: Vec<Cone>) -> Result<Self> {
        let c = Cone::Product(parts);
        c.validate()?;
        Ok(c)
    }

    pub fn simplicial(map: Matrix, base: Cone) -> Result<Self> {
        Ok(Cone::Simplicial(SimplicialCone::new(map, base)?))
    }

    /// Ambient dimension.
    pub fn dim(&self) -> usize {
        match self {
            Cone::Zero(n) | Cone::Free(n) | Cone::Nonneg(n) | Cone::SecondOrder(n) => *n,
            Cone::Circular { dim, .. } => *dim,
            Cone::Psd(order) => svec_len(*order),
            Cone::Product(parts) => parts.iter().map(Cone::dim).sum(),
            Cone::Simplicial(s) => s.out_dim(),
        }
    }

    /// Checks the structural invariants of the descriptor.
    pub fn validate(&self) -> Result<()> {
        match self {
            Cone::Zero(n) | Cone::Free(n) | Cone::Nonneg(n) | Cone::SecondOrder(n) | Cone::Psd(n) => {
                if *n == 0 {
                    return Err(Error::InvalidArgument(format!("{self:?}: dimension must be at least 1")));
                }
            }
            Cone::Circular { dim, omega } => {
                if *dim < 2 {
                    return Err(Error::InvalidArgument(format!(
                        "circular cone needs dim >= 2, got {dim}"
                    )));
                }
                if !(*omega > 0.0 && *omega < FRAC_PI_2) {
                    return Err(Error::InvalidArgument(format!(
                        "circular half-aperture {omega} outside (0, pi/2)"
                    )));
                }
            }
            Cone::Product(parts) => {
                if parts.is_empty() {
                    return Err(Error::InvalidArgument("empty product cone".into()));
                }
                for p in parts {
                    p.validate()?;
                }
            }
            Cone::Simplicial(s) => s.validate()?,
        }
        Ok(())
    }

    /// True for self-dual symmetric cones (orthant, second-order, PSD and
    /// products of these); these are the admissible bases of `MK`.
    pub fn is_symmetric(&self) -> bool {
        match self {
            Cone::Nonneg(_) | Cone::SecondOrder(_) | Cone::Psd(_) => true,
            Cone::Product(parts) => parts.iter().all(Cone::is_symmetric),
            _ => false,
        }
    }

    /// `Π_K(y)`.
    pub fn project(&self, y: &Vector) -> Result<Vector> {
        check_dim("cone projection", self.dim(), y.len())?;
        Ok(match self {
            Cone::Zero(n) => Vector::zeros(*n),
            Cone::Free(_) => y.clone(),
            Cone::Nonneg(_) => y.map(|v| v.max(0.0)),
            Cone::SecondOrder(_) => circular_project(y, 1.0, 1.0),
            Cone::Circular { omega, .. } => {
                let (t, ct) = circular_slopes(*omega);
                circular_project(y, t, ct)
            }
            Cone::Psd(order) => psd_project(y, *order),
            Cone::Product(parts) => {
                let mut out = Vector::zeros(y.len());
                let mut off = 0;
                for p in parts {
                    let d = p.dim();
                    let block = y.rows(off, d).into_owned();
                    out.rows_mut(off, d).copy_from(&p.project(&block)?);
                    off += d;
                }
                out
            }
            Cone::Simplicial(s) => s.project(y, None)?.point,
        })
    }

    /// A deterministic element of `∂_C Π_K(y)`.
    ///
    /// At kinks: orthant entries with `y_i = 0` get 0; second-order and
    /// circular boundary points take the limit from the cone-interior side;
    /// PSD divided differences between two nonpositive eigenvalues are 0.
    pub fn clarke_element(&self, y: &Vector) -> Result<JacobianElement> {
        check_dim("clarke element", self.dim(), y.len())?;
        Ok(JacobianElement(match self {
            Cone::Zero(n) => Matrix::zeros(*n, *n),
            Cone::Free(n) => Matrix::identity(*n, *n),
            Cone::Nonneg(_) => Matrix::from_diagonal(&y.map(|v| if v > 0.0 { 1.0 } else { 0.0 })),
            Cone::SecondOrder(_) => circular_jacobian(y, 1.0, 1.0),
            Cone::Circular { omega, .. } => {
                let (t, ct) = circular_slopes(*omega);
                circular_jacobian(y, t, ct)
            }
            Cone::Psd(order) => psd_jacobian(y, *order),
            Cone::Product(parts) => {
                let n = y.len();
                let mut out = Matrix::zeros(n, n);
                let mut off = 0;
                for p in parts {
                    let d = p.dim();
                    let block = y.rows(off, d).into_owned();
                    out.view_mut((off, off), (d, d))
                        .copy_from(p.clarke_element(&block)?.matrix());
                    off += d;
                }
                out
            }
            Cone::Simplicial(s) => s.clarke_element(y, None)?.into_matrix(),
        }))
    }

    /// `Π_{K*}(y) = y + Π_K(−y)`.
    pub fn project_dual(&self, y: &Vector) -> Result<Vector> {
        Ok(y + self.project(&(-y))?)
    }

    /// `I − V_K(−y)`, an element of `∂_C Π_{K*}(y)`.
    pub fn clarke_element_dual(&self, y: &Vector) -> Result<JacobianElement> {
        let v = self.clarke_element(&(-y))?;
        let n = y.len();
        Ok(JacobianElement(Matrix::identity(n, n) - v.0))
    }

    /// `Π_{K°}(y) = −Π_{K*}(−y)`.
    pub fn project_polar(&self, y: &Vector) -> Result<Vector> {
        Ok(-self.project_dual(&(-y))?)
    }

    /// Membership up to `tol` relative to `max(1, ‖y‖)`, measured as the
    /// distance to the cone.
    pub fn contains(&self, y: &Vector, tol: f64) -> Result<bool> {
        let p = self.project(y)?;
        Ok((p - y).norm() <= tol * y.norm().max(1.0))
    }

    /// Dual-cone membership, same convention as [`Cone::contains`].
    pub fn dual_contains(&self, y: &Vector, tol: f64) -> Result<bool> {
        let p = self.project_dual(y)?;
        Ok((p - y).norm() <= tol * y.norm().max(1.0))
    }

    /// Strict interior membership with a relative margin. Returns `false` when
    /// the cone offers no cheap interior test (simplicial images).
    pub fn strictly_contains(&self, y: &Vector) -> bool {
        if y.len() != self.dim() {
            return false;
        }
        let margin = 1e-9 * y.norm();
        match self {
            Cone::Zero(_) | Cone::Simplicial(_) => false,
            Cone::Free(_) => true,
            Cone::Nonneg(_) => y.iter().all(|&v| v > margin),
            Cone::SecondOrder(_) => y[0] - y.rows(1, y.len() - 1).norm() > margin,
            Cone::Circular { omega, .. } => {
                let (t, _) = circular_slopes(*omega);
                y[0] * t - y.rows(1, y.len() - 1).norm() > margin
            }
            Cone::Psd(order) => {
                let eig = sym_eigen(&smat(y, *order));
                eig.eigenvalues.iter().all(|&l| l > margin)
            }
            Cone::Product(parts) => {
                let mut off = 0;
                parts.iter().all(|p| {
                    let d = p.dim();
                    let ok = p.strictly_contains(&y.rows(off, d).into_owned());
                    off += d;
                    ok
                })
            }
        }
    }

    /// The dual cone when it is again expressible as a descriptor.
    pub fn dual(&self) -> Option<Cone> {
        Some(match self {
            Cone::Zero(n) => Cone::Free(*n),
            Cone::Free(n) => Cone::Zero(*n),
            Cone::Nonneg(_) | Cone::SecondOrder(_) | Cone::Psd(_) => self.clone(),
            Cone::Circular { dim, omega } => Cone::Circular {
                dim: *dim,
                omega: FRAC_PI_2 - *omega,
            },
            Cone::Product(parts) => Cone::Product(parts.iter().map(Cone::dual).collect::<Option<Vec<_>>>()?),
            Cone::Simplicial(_) => return None,
        })
    }

    /// Splits a vector into the blocks of a product cone.
    pub fn blocks<'a>(&'a self, y: &'a Vector) -> Box<dyn Iterator<Item = (&'a Cone, Vector)> + 'a> {
        match self {
            Cone::Product(parts) => {
                let mut off = 0;
                Box::new(parts.iter().map(move |p| {
                    let d = p.dim();
                    let v = y.rows(off, d).into_owned();
                    off += d;
                    (p, v)
                }))
            }
            _ => Box::new(core::iter::once((self, y.clone()))),
        }
    }
}

/// `(tan ω, cot ω)`, exact at `ω = π/4` so that the circular cone coincides
/// bit for bit with the second-order cone there.
pub fn circular_slopes(omega: f64) -> (f64, f64) {
    if omega == FRAC_PI_4 {
        (1.0, 1.0)
    } else {
        let t = omega.tan();
        (t, 1.0 / t)
    }
}

/// The linear map `diag(cot ω, I)` that carries `𝕃ⁿ` onto `𝕃ⁿ_ω`.
pub fn circular_map(dim: usize, omega: f64) -> Matrix {
    let (_, ct) = circular_slopes(omega);
    let mut m = Matrix::identity(dim, dim);
    m[(0, 0)] = ct;
    m
}

fn split_axis(y: &Vector) -> (f64, Vector, f64) {
    let x1 = y[0];
    let u = y.rows(1, y.len() - 1).into_owned();
    let nu = u.norm();
    (x1, u, nu)
}

fn circular_project(y: &Vector, t: f64, ct: f64) -> Vector {
    let (x1, u, nu) = split_axis(y);
    if nu <= x1 * t {
        return y.clone();
    }
    if nu <= -x1 * ct {
        return Vector::zeros(y.len());
    }
    // nu > 0 here: nu = 0 falls in one of the branches above.
    let s = (x1 + t * nu) / (1.0 + t * t);
    let mut p = Vector::zeros(y.len());
    p[0] = s;
    let scale = s * t / nu;
    for i in 0..u.len() {
        p[i + 1] = scale * u[i];
    }
    p
}

fn circular_jacobian(y: &Vector, t: f64, ct: f64) -> Matrix {
    let n = y.len();
    let (x1, u, nu) = split_axis(y);
    if nu <= x1 * t {
        return Matrix::identity(n, n);
    }
    if nu < -x1 * ct {
        return Matrix::zeros(n, n);
    }
    let ubar = u / nu;
    let s = (x1 + t * nu) / (1.0 + t * t);
    let k = 1.0 / (1.0 + t * t);
    let mut v = Matrix::zeros(n, n);
    v[(0, 0)] = k;
    let tail_coef = t * s / nu;
    for i in 0..(n - 1) {
        v[(0, i + 1)] = k * t * ubar[i];
        v[(i + 1, 0)] = k * t * ubar[i];
        for j in 0..(n - 1) {
            let uu = ubar[i] * ubar[j];
            let id = if i == j { 1.0 } else { 0.0 };
            v[(i + 1, j + 1)] = k * t * t * uu + tail_coef * (id - uu);
        }
    }
    v
}

fn psd_project(y: &Vector, order: usize) -> Vector {
    let eig = sym_eigen(&smat(y, order));
    let q = &eig.eigenvectors;
    let d = eig.eigenvalues.map(|l| l.max(0.0));
    svec(&(q * Matrix::from_diagonal(&d) * q.transpose()))
}

fn psd_jacobian(y: &Vector, order: usize) -> Matrix {
    let eig = sym_eigen(&smat(y, order));
    let q = &eig.eigenvectors;
    let lam = &eig.eigenvalues;
    let mut omega = Matrix::zeros(order, order);
    for i in 0..order {
        for j in 0..order {
            let (a, b) = (lam[i], lam[j]);
            omega[(i, j)] = match (a > 0.0, b > 0.0) {
                (true, true) => 1.0,
                (false, false) => 0.0,
                (true, false) => a / (a - b),
                (false, true) => b / (b - a),
            };
        }
    }
    let d = svec_len(order);
    let mut v = Matrix::zeros(d, d);
    let mut e = Vector::zeros(d);
    for k in 0..d {
        e.fill(0.0);
        e[k] = 1.0;
        let h = smat(&e, order);
        let ht = q.transpose() * h * q;
        let inner = ht.component_mul(&omega);
        let col = svec(&(q * inner * q.transpose()));
        v.set_column(k, &col);
    }
    crate::linalg::symmetrize(&v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn v(xs: &[f64]) -> Vector {
        Vector::from_column_slice(xs)
    }

    #[test]
    fn orthant_clamps() {
        let k = Cone::Nonneg(3);
        assert_eq!(k.project(&v(&[1.0, -2.0, 3.0])).unwrap(), v(&[1.0, 0.0, 3.0]));
        let j = k.clarke_element(&v(&[1.0, -2.0, 3.0])).unwrap();
        assert_eq!(j.0, Matrix::from_diagonal(&v(&[1.0, 0.0, 1.0])));
    }

    #[test]
    fn orthant_kink_entry_is_zero() {
        let j = Cone::Nonneg(2).clarke_element(&v(&[0.0, 1.0])).unwrap();
        assert_eq!(j.0[(0, 0)], 0.0);
    }

    #[test]
    fn second_order_boundary_projection() {
        let p = Cone::SecondOrder(3).project(&v(&[0.0, 3.0, 4.0])).unwrap();
        assert!((p - v(&[2.5, 1.5, 2.0])).norm() < 1e-15);
    }

    #[test]
    fn circular_quarter_pi_matches_second_order() {
        let y = v(&[0.0, 3.0, 4.0]);
        let soc = Cone::SecondOrder(3);
        let circ = Cone::circular(3, FRAC_PI_4).unwrap();
        assert_eq!(soc.project(&y).unwrap(), circ.project(&y).unwrap());
        assert_eq!(soc.clarke_element(&y).unwrap(), circ.clarke_element(&y).unwrap());
    }

    #[test]
    fn second_order_half_line() {
        let k = Cone::SecondOrder(1);
        assert_eq!(k.project(&v(&[-2.0])).unwrap(), v(&[0.0]));
        assert_eq!(k.project(&v(&[2.0])).unwrap(), v(&[2.0]));
    }

    #[test]
    fn axis_points() {
        let k = Cone::SecondOrder(3);
        assert_eq!(k.project(&v(&[-1.0, 0.0, 0.0])).unwrap(), v(&[0.0, 0.0, 0.0]));
        assert_eq!(k.project(&v(&[0.0, 0.0, 0.0])).unwrap(), v(&[0.0, 0.0, 0.0]));
        assert_eq!(k.clarke_element(&v(&[0.0, 0.0, 0.0])).unwrap().0, Matrix::identity(3, 3));
    }

    #[test]
    fn free_and_zero_duals() {
        let y = v(&[1.0, -4.0]);
        assert_eq!(Cone::Zero(2).project_dual(&y).unwrap(), y);
        assert_eq!(Cone::Free(2).project_dual(&y).unwrap(), v(&[0.0, 0.0]));
        assert_eq!(Cone::Free(2).clarke_element(&y).unwrap().0, Matrix::identity(2, 2));
        assert_eq!(Cone::Free(2).clarke_element_dual(&y).unwrap().0, Matrix::zeros(2, 2));
        assert_eq!(Cone::Nonneg(1).project_dual(&v(&[-1.0])).unwrap(), v(&[0.0]));
        assert_eq!(
            Cone::Nonneg(2).clarke_element_dual(&v(&[3.0, -5.0])).unwrap().0,
            Matrix::from_diagonal(&v(&[1.0, 0.0]))
        );
    }

    #[test]
    fn circular_dual_projection_lands_in_dual() {
        let omega = core::f64::consts::PI / 6.0;
        let k = Cone::circular(3, omega).unwrap();
        let p = k.project_dual(&v(&[-0.3, 2.0, -1.0])).unwrap();
        let nu = (p[1] * p[1] + p[2] * p[2]).sqrt();
        assert!(nu <= p[0] / omega.tan() + 1e-12);
    }

    #[test]
    fn psd_projection_clamps_spectrum() {
        let m = Matrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        let p = smat(&Cone::Psd(2).project(&svec(&m)).unwrap(), 2);
        let expect = Matrix::from_row_slice(2, 2, &[1.5, 1.5, 1.5, 1.5]);
        assert!((p - expect).norm() < 1e-12);
    }

    #[test]
    fn dimension_errors() {
        assert!(matches!(
            Cone::Nonneg(3).project(&v(&[1.0])),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(Cone::circular(1, 0.3).is_err());
        assert!(Cone::circular(3, 1.7).is_err());
        assert!(Cone::product(vec![]).is_err());
    }

    #[test]
    fn circular_dual_descriptor() {
        let d = Cone::Circular { dim: 3, omega: 0.3 }.dual().unwrap();
        let y = v(&[1.0, 0.5, -0.2]);
        let a = Cone::Circular { dim: 3, omega: 0.3 }.project_dual(&y).unwrap();
        let b = d.project(&y).unwrap();
        assert!((a - b).norm() < 1e-12);
    }
}
