//! Dense linear-algebra kernels shared by the projection and Newton solvers.
//!
//! Symmetric matrices are carried as vectors through the scaled symmetric
//! vectorization `svec`, which stacks the upper triangle row by row and
//! multiplies off-diagonal entries by `sqrt(2)`. Under this map the Euclidean
//! inner product of two vectors equals the trace inner product of the
//! matrices they represent.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
#[allow(unused_imports)]
use num_traits::Float;

pub type Vector = DVector<f64>;
pub type Matrix = DMatrix<f64>;

/// Length of `svec` for symmetric matrices of the given order.
pub fn svec_len(order: usize) -> usize {
    order * (order + 1) / 2
}

/// Inverse of [`svec_len`]; `None` when `len` is not a triangular number.
pub fn svec_order(len: usize) -> Option<usize> {
    let mut n = 0;
    while svec_len(n) < len {
        n += 1;
    }
    (svec_len(n) == len).then_some(n)
}

pub fn svec(s: &Matrix) -> Vector {
    let n = s.nrows();
    let mut v = Vector::zeros(svec_len(n));
    let mut k = 0;
    for i in 0..n {
        v[k] = s[(i, i)];
        k += 1;
        for j in (i + 1)..n {
            v[k] = core::f64::consts::SQRT_2 * 0.5 * (s[(i, j)] + s[(j, i)]);
            k += 1;
        }
    }
    v
}

pub fn smat(v: &Vector, order: usize) -> Matrix {
    debug_assert_eq!(v.len(), svec_len(order));
    let mut s = Matrix::zeros(order, order);
    let mut k = 0;
    for i in 0..order {
        s[(i, i)] = v[k];
        k += 1;
        for j in (i + 1)..order {
            let x = v[k] * core::f64::consts::FRAC_1_SQRT_2;
            s[(i, j)] = x;
            s[(j, i)] = x;
            k += 1;
        }
    }
    s
}

/// `(A + Aᵀ)/2`.
pub fn symmetrize(a: &Matrix) -> Matrix {
    (a + a.transpose()) * 0.5
}

pub fn sym_eigen(s: &Matrix) -> SymmetricEigen<f64, nalgebra::Dyn> {
    SymmetricEigen::new(symmetrize(s))
}

pub fn min_eigenvalue(s: &Matrix) -> f64 {
    sym_eigen(s).eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
}

/// Square root of a symmetric positive semidefinite matrix; negative
/// eigenvalues produced by roundoff are clamped to zero.
pub fn psd_sqrt(s: &Matrix) -> Matrix {
    let eig = sym_eigen(s);
    let q = &eig.eigenvectors;
    let d = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
    q * Matrix::from_diagonal(&d) * q.transpose()
}

/// Moore-Penrose pseudo-inverse of a symmetric matrix. Eigenvalues below
/// `rel * max|eig|` are treated as zero.
pub fn sym_pinv(s: &Matrix, rel: f64) -> Matrix {
    let eig = sym_eigen(s);
    let scale = eig.eigenvalues.iter().fold(0.0f64, |m, l| m.max(l.abs()));
    let cut = rel * scale;
    let q = &eig.eigenvectors;
    let d = eig
        .eigenvalues
        .map(|l| if l.abs() > cut && l != 0.0 { 1.0 / l } else { 0.0 });
    symmetrize(&(q * Matrix::from_diagonal(&d) * q.transpose()))
}

/// Numerical rank of `m` from the spectrum of `mᵀm`, plus an orthonormal basis
/// of its kernel (columns).
pub fn rank_and_kernel(m: &Matrix, rel: f64) -> (usize, Matrix) {
    let cols = m.ncols();
    let eig = sym_eigen(&(m.transpose() * m));
    let scale = eig.eigenvalues.iter().fold(0.0f64, |a, l| a.max(l.abs()));
    let cut = rel * scale.max(f64::MIN_POSITIVE);
    let kernel: alloc::vec::Vec<usize> = (0..cols)
        .filter(|&i| eig.eigenvalues[i] <= cut)
        .collect();
    let mut basis = Matrix::zeros(cols, kernel.len());
    for (c, &i) in kernel.iter().enumerate() {
        basis.set_column(c, &eig.eigenvectors.column(i));
    }
    (cols - kernel.len(), basis)
}

/// Solves `j d = rhs` by LU with partial pivoting.
///
/// Returns `None` when the smallest pivot falls below `pivot_rel` times the
/// largest one, or when the relative residual `‖j d − rhs‖ / ‖rhs‖` after one
/// refinement step exceeds `residual_rel`.
pub fn solve_pivoted(j: &Matrix, rhs: &Vector, pivot_rel: f64, residual_rel: f64) -> Option<Vector> {
    let n = j.nrows();
    if n != j.ncols() || n != rhs.len() {
        return None;
    }
    if n == 0 {
        return Some(Vector::zeros(0));
    }
    let lu = j.clone().lu();
    let u = lu.u();
    let mut max_piv = 0.0f64;
    let mut min_piv = f64::INFINITY;
    for i in 0..n {
        let p = u[(i, i)].abs();
        max_piv = max_piv.max(p);
        min_piv = min_piv.min(p);
    }
    if !(max_piv > 0.0) || min_piv < pivot_rel * max_piv {
        return None;
    }
    let mut d = lu.solve(rhs)?;
    let r = rhs - j * &d;
    if let Some(delta) = lu.solve(&r) {
        d += delta;
    }
    let rhs_norm = rhs.norm();
    if rhs_norm > 0.0 {
        let rel = (j * &d - rhs).norm() / rhs_norm;
        if !(rel <= residual_rel) {
            return None;
        }
    }
    if d.iter().all(|v| v.is_finite()) {
        Some(d)
    } else {
        None
    }
}

/// Solves `(jᵀj + mu I) d = rhs` for `mu > 0`.
#[cfg(not(feature = "std"))]
fn dot4(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0; 4];
    let (ca, ra) = a.split_at(a.len() / 4 * 4);
    let (cb, rb) = b.split_at(ca.len());
    for (x, y) in ca.chunks_exact(4).zip(cb.chunks_exact(4)) {
        for k in 0..4 {
            acc[k] += x[k] * y[k];
        }
    }
    let tail: f64 = ra.iter().zip(rb).map(|(x, y)| x * y).sum();
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// `jᵀj`.
#[cfg(feature = "std")]
pub fn gram(j: &Matrix) -> Matrix {
    let a = j.transpose() * j;
    (&a + a.transpose()) * 0.5
}

/// `jᵀj`, filling the lower triangle from the upper one.
#[cfg(not(feature = "std"))]
pub fn gram(j: &Matrix) -> Matrix {
    let n = j.ncols();
    let mut a = Matrix::zeros(n, n);
    for c in 0..n {
        let cc = j.column(c);
        let cs = cc.as_slice();
        for r in 0..=c {
            let v = dot4(j.column(r).as_slice(), cs);
            a[(r, c)] = v;
            a[(c, r)] = v;
        }
    }
    a
}

pub fn solve_regularized(j: &Matrix, mu: f64, rhs: &Vector) -> Vector {
    let mut a = gram(j);
    for i in 0..a.nrows() {
        a[(i, i)] += mu;
    }
    solve_spd(a, rhs)
}

/// Solves a symmetric positive definite system, falling back to LU when the
/// Cholesky factorization breaks down in floating point.
pub fn solve_spd(a: Matrix, rhs: &Vector) -> Vector {
    match a.clone().cholesky() {
        Some(ch) => ch.solve(rhs),
        None => a
            .full_piv_lu()
            .solve(rhs)
            .unwrap_or_else(|| Vector::zeros(rhs.len())),
    }
}

/// Spectral norm of a dense matrix.
pub fn spectral_norm(a: &Matrix) -> f64 {
    let g = a.tr_mul(a);
    sym_eigen(&g)
        .eigenvalues
        .iter()
        .fold(0.0f64, |m, l| m.max(*l))
        .max(0.0)
        .sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gram_matches_product() {
        let j = Matrix::from_fn(5, 3, |r, c| (r as f64 + 1.0) * 0.3 - c as f64);
        assert!((gram(&j) - j.tr_mul(&j)).norm() < 1e-12);
    }

    #[test]
    fn svec_preserves_trace_inner_product() {
        let a = Matrix::from_row_slice(3, 3, &[1.0, 2.0, 3.0, 2.0, -1.0, 0.5, 3.0, 0.5, 4.0]);
        let b = Matrix::from_row_slice(3, 3, &[0.0, 1.0, -2.0, 1.0, 2.0, 1.5, -2.0, 1.5, -3.0]);
        let trace = (&a * &b).trace();
        assert!((svec(&a).dot(&svec(&b)) - trace).abs() < 1e-12);
        assert!((smat(&svec(&a), 3) - &a).norm() < 1e-14);
    }

    #[test]
    fn svec_order_roundtrip() {
        assert_eq!(svec_order(10), Some(4));
        assert_eq!(svec_order(1), Some(1));
        assert_eq!(svec_order(7), None);
    }

    #[test]
    fn pivoted_solve_flags_singular() {
        let j = Matrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        let rhs = Vector::from_vec(alloc::vec![1.0, 1.0]);
        assert!(solve_pivoted(&j, &rhs, 1e-12, 1e-10).is_none());
        let j = Matrix::from_row_slice(2, 2, &[3.0, 1.0, 1.0, 2.0]);
        let d = solve_pivoted(&j, &rhs, 1e-12, 1e-10).unwrap();
        assert!((&j * d - rhs).norm() < 1e-14);
    }

    #[test]
    fn kernel_of_rank_one_map() {
        let m = Matrix::from_row_slice(1, 2, &[1.0, 1.0]);
        let (rank, ker) = rank_and_kernel(&m, 1e-12);
        assert_eq!(rank, 1);
        assert_eq!(ker.ncols(), 1);
        assert!((ker[(0, 0)] + ker[(1, 0)]).abs() < 1e-12);
    }
}
