//! Thin SVD by one-sided Jacobi rotations.
//!
//! nalgebra's bidiagonal SVD returns inaccurate singular vectors for some
//! rank-deficient inputs (reconstruction errors near 1e-3 on centred
//! snapshot matrices), which POD bases and pseudo-inverses cannot tolerate.

use nalgebra::DMatrix;

/// `a = u * diag(sigma) * v^T` with `r = min(m, n)` columns in `u` and `v`,
/// `sigma` non-increasing, and `u`, `v` orthonormal even where `sigma` is zero.
pub(crate) struct ThinSvd {
    pub u: DMatrix<f64>,
    pub sigma: Vec<f64>,
    pub v: DMatrix<f64>,
}

const MAX_SWEEPS: usize = 80;

pub(crate) fn thin_svd(a: &DMatrix<f64>) -> ThinSvd {
    if a.nrows() < a.ncols() {
        let t = thin_svd(&a.transpose());
        return ThinSvd {
            u: t.v,
            sigma: t.sigma,
            v: t.u,
        };
    }
    let (m, n) = (a.nrows(), a.ncols());
    let mut w = a.clone();
    let mut v = DMatrix::<f64>::identity(n, n);
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let (mut alpha, mut beta, mut gamma) = (0.0, 0.0, 0.0);
                for i in 0..m {
                    let (x, y) = (w[(i, p)], w[(i, q)]);
                    alpha += x * x;
                    beta += y * y;
                    gamma += x * y;
                }
                if gamma == 0.0 || gamma.abs() <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for i in 0..m {
                    let (x, y) = (w[(i, p)], w[(i, q)]);
                    w[(i, p)] = c * x - s * y;
                    w[(i, q)] = s * x + c * y;
                }
                for i in 0..n {
                    let (x, y) = (v[(i, p)], v[(i, q)]);
                    v[(i, p)] = c * x - s * y;
                    v[(i, q)] = s * x + c * y;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let norms: Vec<f64> = (0..n).map(|j| w.column(j).norm()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| norms[y].total_cmp(&norms[x]));
    let smax = norms.iter().copied().fold(0.0, f64::max);
    let tol = smax * (m.max(n) as f64) * f64::EPSILON;

    let mut u = DMatrix::<f64>::zeros(m, n);
    let mut vs = DMatrix::<f64>::zeros(n, n);
    let mut sigma = Vec::with_capacity(n);
    for (k, &j) in order.iter().enumerate() {
        sigma.push(norms[j]);
        vs.set_column(k, &v.column(j));
        if norms[j] > tol {
            u.set_column(k, &(w.column(j) / norms[j]));
        }
    }
    // clean up directions of tiny singular values and fill null directions
    let mut candidate = 0;
    for k in 0..n {
        for _ in 0..2 {
            for j in 0..k {
                let d = u.column(j).dot(&u.column(k));
                let uj = u.column(j).clone_owned();
                u.column_mut(k).axpy(-d, &uj, 1.0);
            }
        }
        let norm = u.column(k).norm();
        if norm > 0.5 {
            u.column_mut(k).scale_mut(1.0 / norm);
            continue;
        }
        // complete with the next standard basis vector that survives projection
        loop {
            let mut e = nalgebra::DVector::<f64>::zeros(m);
            e[candidate % m] = 1.0;
            candidate += 1;
            for _ in 0..2 {
                for j in 0..k {
                    let d = u.column(j).dot(&e);
                    e.axpy(-d, &u.column(j).clone_owned(), 1.0);
                }
            }
            let en = e.norm();
            if en > 1e-3 {
                u.set_column(k, &(e / en));
                break;
            }
        }
    }
    ThinSvd { u, sigma, v: vs }
}
