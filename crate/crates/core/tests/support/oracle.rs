//! Log-barrier interior-point reference solver for
//! `min ||A x - b||^2 + alpha ||B x||_1 + beta ||C x||_1`,
//! written against nalgebra and independent of the crate's ADMM path.

use nalgebra::{DMatrix, DVector};

pub struct Reference {
    pub x: Vec<f64>,
    pub objective: f64,
    pub gap_bound: f64,
}

fn dense(
    rows: usize,
    cols: usize,
    triplets: impl Iterator<Item = (usize, usize, f64)>,
) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(rows, cols);
    for (r, c, v) in triplets {
        m[(r, c)] += v;
    }
    m
}

pub fn objective(
    a: &DMatrix<f64>,
    b: &DVector<f64>,
    bm: &DMatrix<f64>,
    cm: &DMatrix<f64>,
    alpha: f64,
    beta: f64,
    x: &DVector<f64>,
) -> f64 {
    (a * x - b).norm_squared() + alpha * (bm * x).abs().sum() + beta * (cm * x).abs().sum()
}

/// Solves the problem with the barrier method to a duality-gap bound of
/// `gap_tol * |objective|`.
#[allow(clippy::too_many_arguments)]
pub fn solve_reference(
    a_t: impl Iterator<Item = (usize, usize, f64)>,
    b_t: impl Iterator<Item = (usize, usize, f64)>,
    c_t: impl Iterator<Item = (usize, usize, f64)>,
    dims: (usize, usize, usize, usize),
    data: &[f64],
    alpha: f64,
    beta: f64,
    gap_tol: f64,
) -> Reference {
    let (m, p1, p2, n) = dims;
    let a = dense(m, n, a_t);
    let bm = dense(p1, n, b_t);
    let cm = dense(p2, n, c_t);
    let b = DVector::from_column_slice(data);

    // Variables z = [x; t; s]; constraints -t <= Bx <= t, -s <= Cx <= s.
    let dim = n + p1 + p2;
    let mut z = DVector::zeros(dim);
    for k in 0..p1 {
        z[n + k] = 1.0;
    }
    for k in 0..p2 {
        z[n + p1 + k] = 1.0;
    }
    let ata2 = a.transpose() * &a * 2.0;
    let atb2 = a.transpose() * &b * 2.0;

    let f0 = |z: &DVector<f64>| -> f64 {
        let x = z.rows(0, n).into_owned();
        (&a * &x - &b).norm_squared()
            + alpha * z.rows(n, p1).sum()
            + beta * z.rows(n + p1, p2).sum()
    };
    let barrier = |z: &DVector<f64>| -> Option<f64> {
        let x = z.rows(0, n).into_owned();
        let y1 = &bm * &x;
        let y2 = &cm * &x;
        let mut phi = 0.0;
        for k in 0..p1 {
            let (lo, hi) = (z[n + k] + y1[k], z[n + k] - y1[k]);
            if lo <= 0.0 || hi <= 0.0 {
                return None;
            }
            phi -= lo.ln() + hi.ln();
        }
        for k in 0..p2 {
            let (lo, hi) = (z[n + p1 + k] + y2[k], z[n + p1 + k] - y2[k]);
            if lo <= 0.0 || hi <= 0.0 {
                return None;
            }
            phi -= lo.ln() + hi.ln();
        }
        Some(phi)
    };

    let n_constraints = 2.0 * (p1 + p2) as f64;
    let mut tau = 1.0;
    loop {
        // Newton on tau * f0 + barrier.
        for _ in 0..200 {
            let x = z.rows(0, n).into_owned();
            let mut grad = DVector::zeros(dim);
            let mut hess = DMatrix::zeros(dim, dim);
            let gx = (&ata2 * &x - &atb2) * tau;
            grad.rows_mut(0, n).copy_from(&gx);
            hess.view_mut((0, 0), (n, n)).copy_from(&(&ata2 * tau));
            for k in 0..p1 {
                grad[n + k] += tau * alpha;
            }
            for k in 0..p2 {
                grad[n + p1 + k] += tau * beta;
            }
            let blocks = [(&bm, n, p1), (&cm, n + p1, p2)];
            for (op, off, p) in blocks {
                let y = op * &x;
                for k in 0..p {
                    let t = z[off + k];
                    let (ia, ib) = (1.0 / (t - y[k]), 1.0 / (t + y[k]));
                    // d/dt and d/dy of -log(t - y) - log(t + y)
                    let gt = -ia - ib;
                    let gy = ia - ib;
                    let htt = ia * ia + ib * ib;
                    let hty = -ia * ia + ib * ib;
                    let hyy = ia * ia + ib * ib;
                    grad[off + k] += gt;
                    let row = op.row(k);
                    for c in 0..n {
                        grad[c] += gy * row[c];
                    }
                    hess[(off + k, off + k)] += htt;
                    for c in 0..n {
                        let v = hty * row[c];
                        hess[(off + k, c)] += v;
                        hess[(c, off + k)] += v;
                    }
                    for r in 0..n {
                        if row[r] == 0.0 {
                            continue;
                        }
                        for c in 0..n {
                            hess[(r, c)] += hyy * row[r] * row[c];
                        }
                    }
                }
            }
            let step = hess
                .clone()
                .cholesky()
                .map(|ch| ch.solve(&(-&grad)))
                .unwrap_or_else(|| {
                    hess.clone()
                        .lu()
                        .solve(&(-&grad))
                        .expect("singular Newton system")
                });
            let decrement = -grad.dot(&step);
            if decrement / 2.0 < 1e-13 {
                break;
            }
            let merit = |z: &DVector<f64>| barrier(z).map(|phi| tau * f0(z) + phi);
            let current = merit(&z).unwrap();
            let mut s = 1.0;
            loop {
                let trial = &z + &step * s;
                if let Some(v) = merit(&trial) {
                    if v <= current - 0.25 * s * decrement {
                        z = trial;
                        break;
                    }
                }
                s *= 0.5;
                if s < 1e-20 {
                    break;
                }
            }
        }
        let gap = n_constraints / tau;
        let fx = f0(&z);
        if gap <= gap_tol * fx.abs().max(1e-300) {
            let x = z.rows(0, n).into_owned();
            return Reference {
                objective: objective(&a, &b, &bm, &cm, alpha, beta, &x),
                x: x.iter().copied().collect(),
                gap_bound: gap,
            };
        }
        tau *= 8.0;
    }
}
