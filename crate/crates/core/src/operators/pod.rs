//! Proper-orthogonal-decomposition basis and the POD-DeepONet forward pass.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::thin_svd;
use crate::netcore::{LatentDotSpec, NetworkParams, Tape, Var};
use crate::operators::network::branch_graph;
use crate::operators::FusionConfig;
use crate::tensor::DenseTensor;

/// Mean field and leading POD modes, one set per output variable.
#[derive(Debug, Clone, PartialEq)]
pub struct PodBasis {
    pub points: usize,
    pub latent: usize,
    pub n_vars: usize,
    /// `[N_pts, n_v]`.
    pub mean: DenseTensor,
    /// `[N_pts, n_v * latent]`; column `s * latent + k` is mode `k` of variable `s`.
    pub modes: DenseTensor,
    /// All singular values of each variable's centred snapshot matrix, non-increasing.
    pub singular_values: Vec<Vec<f64>>,
}

/// Fits `latent` modes per variable from `targets: [N, N_pts, n_v]`.
pub fn pod_fit_basis(targets: &DenseTensor, latent: usize) -> Result<PodBasis> {
    if targets.rank() != 3 {
        return Err(Error::dim("pod targets rank", 3, targets.rank()));
    }
    let (n, pts, nv) = (targets.shape()[0], targets.shape()[1], targets.shape()[2]);
    if latent == 0 || latent > n.min(pts) {
        return Err(Error::contract(format!(
            "latent {latent} must lie in 1..=min(N={n}, N_pts={pts})"
        )));
    }
    targets.ensure_finite("pod targets")?;
    let at = |i: usize, p: usize, s: usize| targets.data()[(i * pts + p) * nv + s];

    let mut mean = DenseTensor::zeros(&[pts, nv]);
    for p in 0..pts {
        for s in 0..nv {
            let m = (0..n).map(|i| at(i, p, s)).sum::<f64>() / n as f64;
            mean.set(&[p, s], m);
        }
    }
    let mut modes = DenseTensor::zeros(&[pts, nv * latent]);
    let mut singular_values = Vec::with_capacity(nv);
    for s in 0..nv {
        let centred = DMatrix::from_fn(pts, n, |p, i| at(i, p, s) - mean.get(&[p, s]));
        let svd = thin_svd(&centred);
        for k in 0..latent {
            for p in 0..pts {
                modes.set(&[p, s * latent + k], svd.u[(p, k)]);
            }
        }
        singular_values.push(svd.sigma);
    }
    Ok(PodBasis {
        points: pts,
        latent,
        n_vars: nv,
        mean,
        modes,
        singular_values,
    })
}

impl PodBasis {
    /// Coefficients `Phi_s^T (u_s - T0_s)` of one sample `[N_pts, n_v]`,
    /// laid out like a branch head row (`n_v` blocks of `latent`).
    pub fn project(&self, sample: &DenseTensor) -> Result<Vec<f64>> {
        if sample.len() != self.points * self.n_vars {
            return Err(Error::dim(
                "pod project",
                self.points * self.n_vars,
                sample.len(),
            ));
        }
        let mut coeffs = vec![0.0; self.n_vars * self.latent];
        for s in 0..self.n_vars {
            for k in 0..self.latent {
                let col = s * self.latent + k;
                coeffs[col] = (0..self.points)
                    .map(|p| {
                        self.modes.get(&[p, col])
                            * (sample.data()[p * self.n_vars + s] - self.mean.get(&[p, s]))
                    })
                    .sum();
            }
        }
        Ok(coeffs)
    }

    /// `T0 + sum_k c_k Phi_k` for coefficients in branch-head layout.
    pub fn reconstruct(&self, coeffs: &[f64]) -> DenseTensor {
        let mut out = self.mean.clone();
        for p in 0..self.points {
            for s in 0..self.n_vars {
                let mut v = out.get(&[p, s]);
                for k in 0..self.latent {
                    v += coeffs[s * self.latent + k] * self.modes.get(&[p, s * self.latent + k]);
                }
                out.set(&[p, s], v);
            }
        }
        out
    }
}

/// Graph form of the POD prediction for `samples` branch rows.
pub fn pod_graph(
    tape: &mut Tape,
    params: &NetworkParams,
    cfg: &FusionConfig,
    basis: &PodBasis,
    xb: Var,
) -> Result<Var> {
    if cfg.latent != basis.latent || cfg.n_vars != basis.n_vars {
        return Err(Error::dim(
            "pod basis vs config",
            format!("latent {} / n_v {}", cfg.latent, cfg.n_vars),
            format!("latent {} / n_v {}", basis.latent, basis.n_vars),
        ));
    }
    let samples = tape.value(xb).rows();
    let branch = branch_graph(tape, params, cfg, xb)?;
    let trunk = tape.leaf(basis.modes.clone());
    let field = tape.latent_dot(
        branch.head,
        trunk,
        LatentDotSpec {
            samples,
            points: basis.points,
            latent: basis.latent,
            n_vars: basis.n_vars,
            shared_trunk: true,
            trunk_per_var: true,
        },
    )?;
    let mut tiled = Vec::with_capacity(samples * basis.mean.len());
    for _ in 0..samples {
        tiled.extend_from_slice(basis.mean.data());
    }
    let mean = tape.leaf(DenseTensor::new(
        vec![samples * basis.points, basis.n_vars],
        tiled,
    )?);
    tape.add(field, mean)
}

/// POD-DeepONet prediction `sum_k B_{k,s} T_k + T_0`, `[N, N_pts, n_v]`.
pub fn pod_forward(
    params: &NetworkParams,
    cfg: &FusionConfig,
    xb: &DenseTensor,
    basis: &PodBasis,
) -> Result<DenseTensor> {
    let n = xb.rows();
    let mut tape = Tape::new(params.len());
    let b = tape.leaf(xb.clone());
    let out = pod_graph(&mut tape, params, cfg, basis, b)?;
    tape.value(out)
        .clone()
        .reshape(&[n, basis.points, basis.n_vars])
}

/// Grid-size guard used by callers that hold per-sample coordinates.
pub fn check_pod_grid(basis: &PodBasis, points: usize) -> Result<()> {
    if basis.points != points {
        return Err(Error::dim("pod grid size", basis.points, points));
    }
    Ok(())
}
