//! Quadratic programs with the identity constraint map,
//! `min ½xᵀQx + qᵀx s.t. x ∈ K`.

use crate::cones::Cone;
use crate::error::{check_dim, Result};
use crate::linalg::{self, Matrix, Vector};
use crate::ncp::{NcpProblem, SmoothModel};

#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticModel {
    pub q_mat: Matrix,
    pub q_vec: Vector,
}

impl SmoothModel for QuadraticModel {
    fn x_dim(&self) -> usize {
        self.q_vec.len()
    }
    fn g_dim(&self) -> usize {
        self.q_vec.len()
    }
    fn objective(&self, x: &Vector) -> f64 {
        0.5 * x.dot(&(&self.q_mat * x)) + self.q_vec.dot(x)
    }
    fn gradient(&self, x: &Vector) -> Vector {
        &self.q_mat * x + &self.q_vec
    }
    fn hessian(&self, _x: &Vector) -> Matrix {
        self.q_mat.clone()
    }
    fn constraint(&self, x: &Vector) -> Vector {
        x.clone()
    }
    fn constraint_apply(&self, _x: &Vector, dx: &Vector) -> Vector {
        dx.clone()
    }
    fn constraint_adjoint(&self, _x: &Vector, w: &Vector) -> Vector {
        w.clone()
    }
    fn constraint_curvature(&self, _x: &Vector, _w: &Vector) -> Matrix {
        let n = self.q_vec.len();
        Matrix::zeros(n, n)
    }
    fn constraint_jacobian(&self, _x: &Vector) -> Matrix {
        let n = self.q_vec.len();
        Matrix::identity(n, n)
    }
}

/// `‖I − Q‖₂ < 1`, under which the single-equation form has a unique zero.
pub fn contraction_certified(q_mat: &Matrix) -> bool {
    let n = q_mat.nrows();
    linalg::spectral_norm(&(Matrix::identity(n, n) - q_mat)) < 1.0
}

pub fn build_identity_qp(q_mat: Matrix, q_vec: Vector, cone: Cone) -> Result<NcpProblem<QuadraticModel>> {
    check_dim("quadratic term", q_vec.len(), q_mat.nrows())?;
    check_dim("quadratic term", q_vec.len(), q_mat.ncols())?;
    NcpProblem::new(
        QuadraticModel {
            q_mat: linalg::symmetrize(&q_mat),
            q_vec,
        },
        cone,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ncp::identity_equation_residual;

    #[test]
    fn unit_hessian_solution_is_minus_q() {
        let q = Vector::from_vec(alloc::vec![0.3, -1.2, 2.0]);
        let p = build_identity_qp(Matrix::identity(3, 3), q.clone(), Cone::Nonneg(3)).unwrap();
        let r = identity_equation_residual(&p, &(-&q)).unwrap();
        assert!(r.norm() < 1e-15);
        assert!(contraction_certified(&Matrix::identity(3, 3)));
        assert!(!contraction_certified(&(Matrix::identity(3, 3) * 2.0)));
    }
}
