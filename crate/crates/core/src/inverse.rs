//! Sparsity-regularized field reconstruction.
//!
//! Minimizes `||R_long e - I||^2 + alpha ||R_trans e||_1 + beta ||W e||_1`
//! with ADMM on the splits `z1 = R_trans e` and `z2 = W e`. The quadratic
//! subproblem is solved with a dense Cholesky factor that is cached per
//! penalty parameter and shared between solves.

use std::collections::BTreeMap;
use std::sync::{Arc, Mutex};
use std::time::Instant;

use crate::field::NodalField;
use crate::geometry::TriMesh;
use crate::linalg::{norm1, norm2, CsrMatrix, DenseCholesky, DenseMatrix};
use crate::ray::RayMatrix;
use crate::{Error, Real, Result};

/// Floor added to column norms before inversion.
pub const WEIGHT_FLOOR: f64 = 1e-6;

const ADAPT_INTERVAL: usize = 50;
const ADAPT_THRESHOLD: f64 = 5.0;
const CHECK_INTERVAL: usize = 10;

/// Uniform-average vector Laplacian, block diagonal over the x and y components.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorLaplacian<T> {
    matrix: CsrMatrix<T>,
}

impl<T: Real> VectorLaplacian<T> {
    pub fn csr(&self) -> &CsrMatrix<T> {
        &self.matrix
    }

    pub fn apply(&self, e: &NodalField<T>) -> Result<Vec<T>> {
        self.matrix.mul_vec(e.values())
    }
}

/// `(D e)_i = e_i - mean of e over the edge neighbours of node i`, per component.
pub fn build_laplacian<T: Real>(mesh: &TriMesh<T>) -> Result<VectorLaplacian<T>> {
    let n = mesh.num_nodes();
    let adj = mesh.node_neighbors();
    let mut triplets = Vec::new();
    for (i, nbrs) in adj.iter().enumerate() {
        if nbrs.is_empty() {
            return Err(Error::IsolatedNode { node: i });
        }
        let w = T::one() / T::from_usize_lossy(nbrs.len());
        for offset in [0, n] {
            triplets.push((i + offset, i + offset, T::one()));
            for &j in nbrs {
                triplets.push((i + offset, j + offset, -w));
            }
        }
    }
    Ok(VectorLaplacian {
        matrix: CsrMatrix::from_triplets(2 * n, 2 * n, triplets)?,
    })
}

/// Row weights of the penalty operator `W = diag(w) D`.
#[derive(Debug, Clone, PartialEq)]
pub struct PenaltyWeights<T> {
    w: Vec<T>,
}

impl<T: Real> PenaltyWeights<T> {
    pub fn new(w: Vec<T>) -> Result<Self> {
        if w.iter().any(|&v| !(v > T::zero()) || !v.is_finite()) {
            return Err(Error::InvalidParameter(
                "weights must be finite and positive".into(),
            ));
        }
        Ok(PenaltyWeights { w })
    }

    pub fn values(&self) -> &[T] {
        &self.w
    }

    /// The weighted operator `diag(w) D`.
    pub fn operator(&self, laplacian: &VectorLaplacian<T>) -> Result<CsrMatrix<T>> {
        if self.w.len() != laplacian.matrix.nrows() {
            return Err(Error::DimensionMismatch {
                expected: laplacian.matrix.nrows(),
                found: self.w.len(),
            });
        }
        let mut m = laplacian.matrix.clone();
        m.scale_rows(&self.w);
        Ok(m)
    }
}

/// Depth weights `w_k = 1 / (||R_long[:, k]|| + floor)`, rescaled to unit mean.
pub fn build_weights<T: Real>(r_long: &RayMatrix<T>) -> PenaltyWeights<T> {
    let floor = T::lit(WEIGHT_FLOOR);
    let mut w: Vec<T> = r_long
        .csr()
        .column_norms()
        .into_iter()
        .map(|c| T::one() / (c + floor))
        .collect();
    // Normalize, then keep every weight above the floor; a few passes settle it.
    for _ in 0..8 {
        let mean = w.iter().copied().sum::<T>() / T::from_usize_lossy(w.len());
        w.iter_mut().for_each(|v| *v /= mean);
        if w.iter().all(|&v| v >= floor) {
            break;
        }
        w.iter_mut().for_each(|v| *v = v.max(floor));
    }
    PenaltyWeights { w }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions<T> {
    /// Relative tolerance on the primal and dual residuals.
    pub rel_tol: T,
    /// Absolute tolerance, as a fraction of `||I|| / sqrt(m)` (data units).
    pub abs_tol: T,
    pub max_iters: usize,
    /// Initial penalty parameter; `None` picks one from operator traces.
    pub rho: Option<T>,
    /// Residual balancing of the penalty parameter.
    pub adaptive_rho: bool,
    /// Over-relaxation factor in `[1, 2)`.
    pub relaxation: T,
}

impl<T: Real> Default for SolveOptions<T> {
    fn default() -> Self {
        SolveOptions {
            rel_tol: T::lit(1e-6),
            abs_tol: T::lit(1e-9),
            max_iters: 20_000,
            rho: None,
            adaptive_rho: true,
            relaxation: T::lit(1.6),
        }
    }
}

/// Objective terms and convergence diagnostics of one solve.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport<T> {
    pub objective: T,
    pub fidelity: T,
    pub l1_transverse: T,
    pub l1_laplace: T,
    pub iterations: usize,
    pub primal_residual: T,
    pub dual_residual: T,
    pub rho: T,
    pub seconds: f64,
    /// Objective of every accepted (improving) iterate, in order.
    pub objective_history: Vec<T>,
}

/// Objective decomposition `(total, fidelity, ||R_trans e||_1, ||W e||_1)`.
pub fn objective_terms<T: Real>(
    r_long: &RayMatrix<T>,
    r_trans: &RayMatrix<T>,
    w: &CsrMatrix<T>,
    data: &[T],
    alpha: T,
    beta: T,
    e: &[T],
) -> Result<(T, T, T, T)> {
    let pred = r_long.csr().mul_vec(e)?;
    if pred.len() != data.len() {
        return Err(Error::DimensionMismatch {
            expected: pred.len(),
            found: data.len(),
        });
    }
    let fid: T = pred
        .iter()
        .zip(data)
        .map(|(&p, &d)| (p - d) * (p - d))
        .sum();
    let t = norm1(&r_trans.csr().mul_vec(e)?);
    let l = norm1(&w.mul_vec(e)?);
    Ok((fid + alpha * t + beta * l, fid, t, l))
}

#[inline]
fn soft_threshold<T: Real>(v: T, k: T) -> T {
    if v > k {
        v - k
    } else if v < -k {
        v + k
    } else {
        T::zero()
    }
}

/// Prepared reconstruction problem; operators are fixed, data varies per solve.
pub struct InverseProblem<'a, T> {
    r_long: &'a RayMatrix<T>,
    r_trans: &'a RayMatrix<T>,
    w: &'a CsrMatrix<T>,
    alpha: T,
    beta: T,
    options: SolveOptions<T>,
    /// `c R_trans` with `c` balancing the two penalty blocks.
    r_trans_scaled: CsrMatrix<T>,
    trans_scale: T,
    data_gram: DenseMatrix<T>,
    split_gram: DenseMatrix<T>,
    rho0: T,
    factors: Mutex<BTreeMap<i32, Arc<DenseCholesky<T>>>>,
}

impl<'a, T: Real> InverseProblem<'a, T> {
    pub fn new(
        r_long: &'a RayMatrix<T>,
        r_trans: &'a RayMatrix<T>,
        w: &'a CsrMatrix<T>,
        alpha: T,
        beta: T,
        options: SolveOptions<T>,
    ) -> Result<Self> {
        if !(alpha >= T::zero()) || !(beta >= T::zero()) {
            return Err(Error::InvalidParameter(format!(
                "alpha and beta must be non-negative, got {alpha} and {beta}"
            )));
        }
        if !(options.relaxation >= T::one() && options.relaxation < T::lit(2.0)) {
            return Err(Error::InvalidParameter(
                "relaxation must lie in [1, 2)".into(),
            ));
        }
        let n = r_long.cols();
        for (found, what) in [(r_trans.cols(), "R_trans"), (w.ncols(), "W")] {
            if found != n {
                return Err(Error::InvalidParameter(format!(
                    "{what} has {found} columns, R_long has {n}"
                )));
            }
        }
        if r_trans.rows() != r_long.rows() {
            return Err(Error::DimensionMismatch {
                expected: r_long.rows(),
                found: r_trans.rows(),
            });
        }
        let mut data_gram = DenseMatrix::zeros(n);
        r_long.csr().add_gram_into(T::lit(2.0), &mut data_gram);
        let trace = |m: &DenseMatrix<T>| (0..n).map(|i| m.get(i, i)).sum::<T>();
        let sq_sum = |m: &CsrMatrix<T>| m.triplets().map(|(_, _, v)| v * v).sum::<T>();
        let (tt, tw) = (sq_sum(r_trans.csr()), sq_sum(w));
        // Balances the two split blocks; acts as a separate penalty parameter per block.
        let trans_scale =
            if tt > T::zero() && tw > T::zero() && alpha > T::zero() && beta > T::zero() {
                (tw / tt).sqrt() * beta / alpha
            } else if tt > T::zero() && tw > T::zero() {
                (tw / tt).sqrt()
            } else {
                T::one()
            };
        let r_trans_scaled = r_trans.csr().map_values(|v| v * trans_scale);
        let mut split_gram = DenseMatrix::zeros(n);
        r_trans_scaled.add_gram_into(T::one(), &mut split_gram);
        w.add_gram_into(T::one(), &mut split_gram);
        let rho0 = match options.rho {
            Some(r) if r > T::zero() => r,
            Some(r) => {
                return Err(Error::InvalidParameter(format!(
                    "rho must be positive, got {r}"
                )))
            }
            None => {
                let (td, ts) = (trace(&data_gram), trace(&split_gram));
                if td > T::zero() && ts > T::zero() {
                    td / ts
                } else {
                    T::one()
                }
            }
        };
        Ok(InverseProblem {
            r_long,
            r_trans,
            w,
            alpha,
            beta,
            options,
            r_trans_scaled,
            trans_scale,
            data_gram,
            split_gram,
            rho0,
            factors: Mutex::new(BTreeMap::new()),
        })
    }

    fn rho_at(&self, level: i32) -> T {
        self.rho0 * T::lit(2f64.powi(level))
    }

    fn factor(&self, level: i32) -> Result<Arc<DenseCholesky<T>>> {
        if let Some(f) = self.factors.lock().unwrap().get(&level) {
            return Ok(f.clone());
        }
        let rho = self.rho_at(level);
        let n = self.data_gram.dim();
        let mut q = self.data_gram.clone();
        for i in 0..n {
            for j in 0..n {
                q.add(i, j, rho * self.split_gram.get(i, j));
            }
        }
        let f = Arc::new(DenseCholesky::factor(&q)?);
        self.factors.lock().unwrap().insert(level, f.clone());
        Ok(f)
    }

    pub fn objective_terms(&self, data: &[T], e: &[T]) -> Result<(T, T, T, T)> {
        objective_terms(
            self.r_long,
            self.r_trans,
            self.w,
            data,
            self.alpha,
            self.beta,
            e,
        )
    }

    /// Runs ADMM from zero and returns the best-objective iterate.
    pub fn solve(&self, data: &[T]) -> Result<(NodalField<T>, SolveReport<T>)> {
        let start = Instant::now();
        let m = self.r_long.rows();
        let n = self.r_long.cols();
        if data.len() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                found: data.len(),
            });
        }
        let p1 = self.r_trans.rows();
        let p2 = self.w.nrows();
        let opts = self.options;
        let two = T::lit(2.0);

        let mut rhs_data = vec![T::zero(); n];
        self.r_long
            .csr()
            .transpose_mul_vec_into(data, &mut rhs_data);
        rhs_data.iter_mut().for_each(|v| *v *= two);

        let data_scale = norm2(data) / T::from_usize_lossy(m.max(1)).sqrt();
        let eps_abs = opts.abs_tol * data_scale.max(T::min_positive_value());
        let sqrt_p = T::from_usize_lossy(p1 + p2).sqrt();
        let sqrt_n = T::from_usize_lossy(n).sqrt();

        // Primal residuals are measured in the units of R_trans e.
        let inv_scale_sq = (self.trans_scale * self.trans_scale).recip();
        let mut level = 0i32;
        let mut rho = self.rho_at(level);
        let mut factor = self.factor(level)?;

        let mut e = vec![T::zero(); n];
        let mut z1 = vec![T::zero(); p1];
        let mut z2 = vec![T::zero(); p2];
        let mut u1 = vec![T::zero(); p1];
        let mut u2 = vec![T::zero(); p2];
        let mut ae1 = vec![T::zero(); p1];
        let mut ae2 = vec![T::zero(); p2];
        let mut tmp1 = vec![T::zero(); p1];
        let mut tmp2 = vec![T::zero(); p2];
        let mut back = vec![T::zero(); n];
        let mut back2 = vec![T::zero(); n];
        let mut pred = vec![T::zero(); m];

        let (obj0, ..) = self.objective_terms(data, &e)?;
        let mut best_obj = obj0;
        let mut best = e.clone();
        let mut history = vec![obj0];
        let (mut r_norm, mut s_norm) = (T::infinity(), T::infinity());
        let mut iterations = 0;
        let mut converged = false;
        let mut next_adapt = ADAPT_INTERVAL;

        for it in 1..=opts.max_iters {
            iterations = it;
            // e-update
            for k in 0..p1 {
                tmp1[k] = z1[k] - u1[k];
            }
            for k in 0..p2 {
                tmp2[k] = z2[k] - u2[k];
            }
            self.r_trans_scaled.transpose_mul_vec_into(&tmp1, &mut back);
            self.w.transpose_mul_vec_into(&tmp2, &mut back2);
            for k in 0..n {
                e[k] = rhs_data[k] + rho * (back[k] + back2[k]);
            }
            factor.solve_in_place(&mut e);

            // z-update with over-relaxation
            self.r_trans_scaled.mul_vec_into(&e, &mut ae1);
            self.w.mul_vec_into(&e, &mut ae2);
            let relax = opts.relaxation;
            let k1 = self.alpha / (self.trans_scale * rho);
            let k2 = self.beta / rho;
            let mut dz_sq = T::zero();
            let mut r_sq = T::zero();
            for k in 0..p1 {
                let hat = relax * ae1[k] + (T::one() - relax) * z1[k];
                let znew = soft_threshold(hat + u1[k], k1);
                tmp1[k] = znew - z1[k];
                u1[k] += hat - znew;
                z1[k] = znew;
                r_sq += (ae1[k] - znew) * (ae1[k] - znew) * inv_scale_sq;
            }
            for k in 0..p2 {
                let hat = relax * ae2[k] + (T::one() - relax) * z2[k];
                let znew = soft_threshold(hat + u2[k], k2);
                tmp2[k] = znew - z2[k];
                u2[k] += hat - znew;
                z2[k] = znew;
                r_sq += (ae2[k] - znew) * (ae2[k] - znew);
            }
            r_norm = r_sq.sqrt();

            self.r_long.csr().mul_vec_into(&e, &mut pred);
            let fid: T = pred
                .iter()
                .zip(data)
                .map(|(&p, &d)| (p - d) * (p - d))
                .sum();
            let obj = fid + self.alpha * norm1(&ae1) / self.trans_scale + self.beta * norm1(&ae2);
            if obj < best_obj {
                best_obj = obj;
                best.copy_from_slice(&e);
                history.push(obj);
            }

            if it % CHECK_INTERVAL != 0 && it != opts.max_iters {
                continue;
            }
            self.r_trans_scaled.transpose_mul_vec_into(&tmp1, &mut back);
            self.w.transpose_mul_vec_into(&tmp2, &mut back2);
            for k in 0..n {
                let v = rho * (back[k] + back2[k]);
                dz_sq += v * v;
            }
            s_norm = dz_sq.sqrt();
            let ae_norm = (norm2(&ae1).powi(2) * inv_scale_sq + norm2(&ae2).powi(2)).sqrt();
            let z_norm = (norm2(&z1).powi(2) * inv_scale_sq + norm2(&z2).powi(2)).sqrt();
            self.r_trans_scaled.transpose_mul_vec_into(&u1, &mut back);
            self.w.transpose_mul_vec_into(&u2, &mut back2);
            let aty_norm = rho
                * back
                    .iter()
                    .zip(&back2)
                    .map(|(&a, &b)| (a + b) * (a + b))
                    .sum::<T>()
                    .sqrt();
            let eps_pri = eps_abs * sqrt_p + opts.rel_tol * ae_norm.max(z_norm);
            let eps_dual = eps_abs * sqrt_n + opts.rel_tol * aty_norm;
            if r_norm <= eps_pri && s_norm <= eps_dual {
                converged = true;
                break;
            }

            if opts.adaptive_rho && it >= next_adapt {
                next_adapt += ADAPT_INTERVAL;
                let ratio = (r_norm / eps_pri) / (s_norm / eps_dual).max(T::min_positive_value());
                // rho scales by sqrt(ratio), rounded to a power of two.
                let step =
                    if ratio > T::lit(ADAPT_THRESHOLD) || ratio < T::lit(1.0 / ADAPT_THRESHOLD) {
                        (ratio.to_f64_lossy().log2() / 2.0).round().clamp(-4.0, 4.0) as i32
                    } else {
                        0
                    };
                if step != 0 && (level + step).abs() <= 30 {
                    level += step;
                    let new_rho = self.rho_at(level);
                    let s = rho / new_rho;
                    u1.iter_mut().for_each(|v| *v *= s);
                    u2.iter_mut().for_each(|v| *v *= s);
                    rho = new_rho;
                    factor = self.factor(level)?;
                }
            }
        }

        if !converged {
            return Err(Error::NonConvergence {
                iterations,
                primal: r_norm.to_f64_lossy(),
                dual: s_norm.to_f64_lossy(),
            });
        }
        let (objective, fidelity, l1_transverse, l1_laplace) = self.objective_terms(data, &best)?;
        let report = SolveReport {
            objective,
            fidelity,
            l1_transverse,
            l1_laplace,
            iterations,
            primal_residual: r_norm,
            dual_residual: s_norm,
            rho,
            seconds: start.elapsed().as_secs_f64(),
            objective_history: history,
        };
        Ok((NodalField::from_vec(best)?, report))
    }
}

/// One-shot solve; see [`InverseProblem`] to reuse factorizations.
pub fn solve<T: Real>(
    r_long: &RayMatrix<T>,
    r_trans: &RayMatrix<T>,
    w: &CsrMatrix<T>,
    data: &[T],
    alpha: T,
    beta: T,
    options: SolveOptions<T>,
) -> Result<(NodalField<T>, SolveReport<T>)> {
    InverseProblem::new(r_long, r_trans, w, alpha, beta, options)?.solve(data)
}

/// `R_trans e`, the transverse line integrals of a reconstructed field.
pub fn transverse_profile<T: Real>(r_trans: &RayMatrix<T>, e: &NodalField<T>) -> Result<Vec<T>> {
    r_trans.apply(e)
}
