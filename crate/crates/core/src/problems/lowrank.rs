//! Rank-constrained matrix completion
//!
//! ```text
//! min ½‖Mask ∘ X − G‖²  s.t.  X − YX = 0,  Y² − Y = 0,  tr Y ≤ r_max
//! ```
//!
//! over `X ∈ ℝ^{n×n}` and symmetric `Y`. The unknown vector stacks `X` row by
//! row followed by `svec(Y)`; the constraint vector stacks `X − YX` row by
//! row, `svec(Y² − Y)` and `r_max − tr Y`.

use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::cones::Cone;
use crate::error::{check_dim, Error, Result};
use crate::linalg::{self, smat, svec, svec_len, Matrix, Vector};
use crate::ncp::{NcpProblem, SmoothModel};
use crate::solver::{solve_with_clock, Clock, SolveReport, SolverConfig, Status};

#[derive(Debug, Clone, PartialEq)]
pub struct CompletionInstance {
    pub n: usize,
    pub p: f64,
    pub r_max: usize,
    /// 0/1 observation pattern.
    pub mask: Matrix,
    /// Observed data, zero off the mask.
    pub g: Matrix,
    pub seed: u64,
    pub planted: Matrix,
}

impl CompletionInstance {
    pub fn observed(&self) -> usize {
        self.mask.iter().filter(|v| **v != 0.0).count()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LowRankModel {
    pub n: usize,
    pub r_max: f64,
    pub mask: Matrix,
    pub g: Matrix,
}

impl LowRankModel {
    pub fn new(mask: Matrix, g: Matrix, r_max: f64) -> Result<Self> {
        let n = mask.nrows();
        check_dim("mask columns", n, mask.ncols())?;
        check_dim("data rows", n, g.nrows())?;
        check_dim("data columns", n, g.ncols())?;
        Ok(Self { n, r_max, mask, g })
    }

    pub fn x_block(&self) -> usize {
        self.n * self.n
    }

    pub fn y_block(&self) -> usize {
        svec_len(self.n)
    }

    /// Splits the unknown vector into `(X, Y)`.
    pub fn unpack(&self, v: &Vector) -> (Matrix, Matrix) {
        let n = self.n;
        let x = Matrix::from_row_slice(n, n, v.rows(0, n * n).as_slice());
        let y = smat(&v.rows(n * n, self.y_block()).into_owned(), n);
        (x, y)
    }

    pub fn pack(&self, x: &Matrix, y: &Matrix) -> Vector {
        let n = self.n;
        let mut v = Vector::zeros(n * n + self.y_block());
        write_rows(&mut v, 0, x);
        v.rows_mut(n * n, self.y_block()).copy_from(&svec(y));
        v
    }

    fn pack_constraint(&self, a: &Matrix, b: &Matrix, c: f64) -> Vector {
        let n = self.n;
        let s = self.y_block();
        let mut v = Vector::zeros(n * n + s + 1);
        write_rows(&mut v, 0, a);
        v.rows_mut(n * n, s).copy_from(&svec(b));
        v[n * n + s] = c;
        v
    }

    fn unpack_multiplier(&self, w: &Vector) -> (Matrix, Matrix, f64) {
        let n = self.n;
        let s = self.y_block();
        let w1 = Matrix::from_row_slice(n, n, w.rows(0, n * n).as_slice());
        let w2 = smat(&w.rows(n * n, s).into_owned(), n);
        (w1, w2, w[n * n + s])
    }

    pub fn cone(&self) -> Cone {
        Cone::Product(alloc::vec![Cone::Zero(self.x_block() + self.y_block()), Cone::Nonneg(1)])
    }
}

fn write_rows(v: &mut Vector, offset: usize, m: &Matrix) {
    let n = m.ncols();
    for i in 0..m.nrows() {
        for j in 0..n {
            v[offset + i * n + j] = m[(i, j)];
        }
    }
}

impl SmoothModel for LowRankModel {
    fn x_dim(&self) -> usize {
        self.x_block() + self.y_block()
    }

    fn g_dim(&self) -> usize {
        self.x_block() + self.y_block() + 1
    }

    fn objective(&self, v: &Vector) -> f64 {
        let (x, _) = self.unpack(v);
        0.5 * (self.mask.component_mul(&x) - &self.g).norm_squared()
    }

    fn gradient(&self, v: &Vector) -> Vector {
        let (x, _) = self.unpack(v);
        let r = self.mask.component_mul(&(self.mask.component_mul(&x) - &self.g));
        self.pack(&r, &Matrix::zeros(self.n, self.n))
    }

    fn hessian(&self, _v: &Vector) -> Matrix {
        let dim = self.x_dim();
        let mut h = Matrix::zeros(dim, dim);
        let n = self.n;
        for i in 0..n {
            for j in 0..n {
                let m = self.mask[(i, j)];
                h[(i * n + j, i * n + j)] = m * m;
            }
        }
        h
    }

    fn constraint(&self, v: &Vector) -> Vector {
        let (x, y) = self.unpack(v);
        let g1 = &x - &y * &x;
        let g2 = &y * &y - &y;
        self.pack_constraint(&g1, &g2, self.r_max - y.trace())
    }

    fn constraint_apply(&self, v: &Vector, dv: &Vector) -> Vector {
        let (x, y) = self.unpack(v);
        let (dx, dy) = self.unpack(dv);
        let d1 = &dx - &y * &dx - &dy * &x;
        let d2 = &dy * &y + &y * &dy - &dy;
        self.pack_constraint(&d1, &d2, -dy.trace())
    }

    fn constraint_adjoint(&self, v: &Vector, w: &Vector) -> Vector {
        let (x, y) = self.unpack(v);
        let (w1, w2, w3) = self.unpack_multiplier(w);
        let ax = &w1 - &y * &w1;
        let mut ay = -(&w1 * x.transpose()) + &w2 * &y + &y * &w2 - &w2;
        for i in 0..self.n {
            ay[(i, i)] -= w3;
        }
        self.pack(&ax, &ay)
    }

    fn constraint_curvature(&self, _v: &Vector, w: &Vector) -> Matrix {
        let (w1, w2, _) = self.unpack_multiplier(w);
        let dim = self.x_dim();
        let mut h = Matrix::zeros(dim, dim);
        let mut e = Vector::zeros(dim);
        for k in 0..dim {
            e[k] = 1.0;
            let (dx, dy) = self.unpack(&e);
            let hx = -(&dy * &w1);
            let hy = -(&w1 * dx.transpose()) + &w2 * &dy + &dy * &w2;
            h.set_column(k, &self.pack(&hx, &hy));
            e[k] = 0.0;
        }
        linalg::symmetrize(&h)
    }
}

pub fn build_lowrank(instance: &CompletionInstance) -> Result<NcpProblem<LowRankModel>> {
    let model = LowRankModel::new(instance.mask.clone(), instance.g.clone(), instance.r_max as f64)?;
    let cone = model.cone();
    NcpProblem::new(model, cone)
}

/// Planted `L Rᵀ` with standard-normal `n × r_max` factors, observed on a
/// mask with exactly `round(p n²)` entries.
pub fn generate_completion(n: usize, p: f64, r_max: usize, seed: u64) -> Result<CompletionInstance> {
    if n < 2 || r_max >= n || r_max == 0 {
        return Err(Error::InvalidArgument(alloc::format!(
            "completion instance needs n >= 2 and 0 < r_max < n, got n = {n}, r_max = {r_max}"
        )));
    }
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::InvalidArgument(alloc::format!("observation fraction must lie in (0, 1], got {p}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let l = Matrix::from_fn(n, r_max, |_, _| StandardNormal.sample(&mut rng));
    let r = Matrix::from_fn(n, r_max, |_, _| StandardNormal.sample(&mut rng));
    let planted = &l * r.transpose();

    let total = n * n;
    let target = ((p * total as f64).round() as usize).min(total);
    let mut on: Vec<usize> = Vec::new();
    let mut off: Vec<usize> = Vec::new();
    for k in 0..total {
        if rng.random::<f64>() < p {
            on.push(k);
        } else {
            off.push(k);
        }
    }
    if on.len() > target {
        on.shuffle(&mut rng);
        on.truncate(target);
    } else if on.len() < target {
        off.shuffle(&mut rng);
        on.extend_from_slice(&off[..target - on.len()]);
    }
    let mut mask = Matrix::zeros(n, n);
    for k in on {
        mask[(k / n, k % n)] = 1.0;
    }
    let g = mask.component_mul(&planted);
    Ok(CompletionInstance {
        n,
        p,
        r_max,
        mask,
        g,
        seed,
        planted,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum InitStrategy {
    /// Rank-one matrix from the largest-norm row of `G`.
    RankOne,
    /// Seeded perturbation of `G`; the index selects the random stream.
    Perturbed(u32),
}

impl core::fmt::Display for InitStrategy {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            InitStrategy::RankOne => f.write_str("rank-one"),
            InitStrategy::Perturbed(k) => write!(f, "perturbed-{k}"),
        }
    }
}

impl InitStrategy {
    pub fn as_str(&self) -> &'static str {
        match self {
            InitStrategy::RankOne => "rank-one",
            InitStrategy::Perturbed(_) => "perturbed",
        }
    }
}

const PERTURB_STREAM: u64 = 0x9e37_79b9_7f4a_7c15;

fn top_projector(x: &Matrix, r: usize) -> Matrix {
    let n = x.nrows();
    let eig = linalg::sym_eigen(&(x * x.transpose()));
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    let mut y = Matrix::zeros(n, n);
    for &k in order.iter().take(r) {
        let u = eig.eigenvectors.column(k);
        y += &u * u.transpose();
    }
    y
}

/// Primal starting point of the given strategy; multipliers start at zero.
pub fn initial_point(model: &LowRankModel, instance: &CompletionInstance, strategy: InitStrategy) -> Vector {
    let n = instance.n;
    let g = &instance.g;
    match strategy {
        InitStrategy::RankOne => {
            let (row, norm) = (0..n)
                .map(|i| (i, g.row(i).norm()))
                .fold((0, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            if norm <= 0.0 {
                return model.pack(&Matrix::zeros(n, n), &Matrix::zeros(n, n));
            }
            let v = g.row(row).transpose() / norm;
            let gv = g * &v;
            let x0 = &gv * v.transpose();
            let gv_norm = gv.norm();
            let y0 = if gv_norm > 0.0 {
                let u = gv / gv_norm;
                &u * u.transpose()
            } else {
                &v * v.transpose()
            };
            model.pack(&x0, &y0)
        }
        InitStrategy::Perturbed(k) => {
            let stream = PERTURB_STREAM.wrapping_mul(u64::from(k) + 1);
            let mut rng = ChaCha8Rng::seed_from_u64(instance.seed ^ stream);
            let scale = 0.1 * (1.0 - instance.p) * g.norm() / n as f64;
            let noise = Matrix::from_fn(n, n, |_, _| {
                let z: f64 = StandardNormal.sample(&mut rng);
                z * scale
            });
            let z = g + noise;
            let y0 = top_projector(&z, instance.r_max);
            let x0 = &y0 * z;
            model.pack(&x0, &y0)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompletionOutcome {
    pub strategy: InitStrategy,
    pub report: SolveReport,
    /// Reports of every strategy tried, in order.
    pub attempts: Vec<(InitStrategy, SolveReport)>,
}

impl CompletionOutcome {
    pub fn solved(&self) -> bool {
        self.report.status == Status::Solved
    }
}

fn better(a: &SolveReport, b: &SolveReport) -> bool {
    let solved = |r: &SolveReport| r.status == Status::Solved;
    match (solved(a), solved(b)) {
        (true, false) => true,
        (false, true) => false,
        _ => a.residual() < b.residual(),
    }
}

/// Solves from the rank-one start and, until one succeeds, from up to
/// `perturbations` perturbed starts; returns the best run.
pub fn solve_completion(
    instance: &CompletionInstance,
    config: &SolverConfig,
    perturbations: u32,
    clock: &dyn Clock,
) -> Result<CompletionOutcome> {
    let problem = build_lowrank(instance)?;
    let m = problem.cone.dim();
    let mut attempts: Vec<(InitStrategy, SolveReport)> = Vec::new();
    let strategies = core::iter::once(InitStrategy::RankOne).chain((0..perturbations).map(InitStrategy::Perturbed));
    for strategy in strategies {
        let x0 = initial_point(&problem.model, instance, strategy);
        let report = solve_with_clock(&problem, x0, Vector::zeros(m), config, clock)?;
        let done = report.status == Status::Solved;
        attempts.push((strategy, report));
        if done {
            break;
        }
    }
    let mut best = 0;
    for k in 1..attempts.len() {
        if better(&attempts[k].1, &attempts[best].1) {
            best = k;
        }
    }
    Ok(CompletionOutcome {
        strategy: attempts[best].0,
        report: attempts[best].1.clone(),
        attempts,
    })
}

/// `‖X − planted‖_F / ‖planted‖_F` at a solution vector.
pub fn recovery_error(instance: &CompletionInstance, model: &LowRankModel, v: &Vector) -> f64 {
    let (x, _) = model.unpack(v);
    (x - &instance.planted).norm() / instance.planted.norm().max(f64::MIN_POSITIVE)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ncp::check_derivatives;

    #[test]
    fn mask_has_exact_count() {
        let inst = generate_completion(10, 0.3, 2, 11).unwrap();
        assert_eq!(inst.observed(), 30);
        assert_eq!(inst.g, inst.mask.component_mul(&inst.planted));
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let inst = generate_completion(4, 0.5, 2, 1).unwrap();
        let p = build_lowrank(&inst).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let dim = p.model.x_dim();
        let x = Vector::from_fn(dim, |_, _| StandardNormal.sample(&mut rng));
        let dx = Vector::from_fn(dim, |_, _| StandardNormal.sample(&mut rng));
        let w = Vector::from_fn(p.model.g_dim(), |_, _| StandardNormal.sample(&mut rng));
        let check = check_derivatives(&p.model, &x, &dx, &w, 1e-6);
        assert!(check.worst() < 1e-5, "{check:?}");
    }

    #[test]
    fn projector_with_range_is_feasible() {
        let model = LowRankModel::new(Matrix::identity(3, 3), Matrix::zeros(3, 3), 2.0).unwrap();
        let mut y = Matrix::zeros(3, 3);
        y[(0, 0)] = 1.0;
        let mut x = Matrix::zeros(3, 3);
        x[(0, 1)] = 2.0;
        x[(0, 2)] = -1.0;
        let g = model.constraint(&model.pack(&x, &y));
        let k = model.x_block() + model.y_block();
        assert!(g.rows(0, k).norm() < 1e-15);
        assert!(g[k] >= 0.0);
    }
}
