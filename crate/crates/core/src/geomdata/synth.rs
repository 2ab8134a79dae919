//! Analytic parameter-dependent 2D fields with a smooth part and a steep
//! tanh front, on uniform or jittered grids over `[-1, 1]^2`.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geomdata::dataset::OperatorDataset;
use crate::tensor::DenseTensor;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthSpec {
    /// Front sharpness `k` in `tanh(k * (n.x - c))`.
    pub steepness: f64,
    pub nx: usize,
    pub ny: usize,
    /// Node displacement as a fraction of the spacing; 0 gives the uniform grid.
    pub jitter: f64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            steepness: 12.0,
            nx: 24,
            ny: 24,
            jitter: 0.0,
        }
    }
}

/// Parameter box of the two geometry parameters.
pub const SYNTH_RANGES: [(f64, f64); 2] = [(0.0, 1.0), (0.0, 1.0)];

/// Field value and gradient at `(x, y)` for parameters `p = (p0, p1)`.
pub fn synth_field(p: &[f64], x: f64, y: f64, steepness: f64) -> (f64, [f64; 2]) {
    let (p0, p1) = (p[0], p[1]);
    let w = 0.5 * PI * (1.0 + p0);
    let (sx, cx) = (w * x).sin_cos();
    let (sy, cy) = (0.5 * PI * y).sin_cos();
    let smooth = 0.5 * sx * cy + 0.3 * p1 * x * y;
    let d_smooth = [
        0.5 * w * cx * cy + 0.3 * p1 * y,
        -0.25 * PI * sx * sy + 0.3 * p1 * x,
    ];

    let theta = PI * (p1 - 0.5) / 3.0;
    let (nsin, ncos) = theta.sin_cos();
    let c = 0.6 * (p0 - 0.5);
    let th = (steepness * (ncos * x + nsin * y - c)).tanh();
    let front = 0.5 * th;
    let g = 0.5 * steepness * (1.0 - th * th);
    (
        smooth + front,
        [d_smooth[0] + g * ncos, d_smooth[1] + g * nsin],
    )
}

/// Grid of sample `i`: uniform nodes, each displaced by up to `jitter` of a
/// spacing (boundary nodes stay on the boundary).
pub fn synth_grid(spec: &SynthSpec, seed: u64, i: usize) -> Vec<[f64; 2]> {
    let hx = 2.0 / (spec.nx - 1) as f64;
    let hy = 2.0 / (spec.ny - 1) as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (i as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    let mut out = Vec::with_capacity(spec.nx * spec.ny);
    for j in 0..spec.ny {
        for k in 0..spec.nx {
            let mut x = -1.0 + hx * k as f64;
            let mut y = -1.0 + hy * j as f64;
            if spec.jitter > 0.0 {
                if k > 0 && k + 1 < spec.nx {
                    x += spec.jitter * hx * rng.random_range(-1.0..1.0);
                }
                if j > 0 && j + 1 < spec.ny {
                    y += spec.jitter * hy * rng.random_range(-1.0..1.0);
                }
            }
            out.push([x, y]);
        }
    }
    out
}

/// One sample per parameter row; targets have a single variable.
pub fn synth_field_dataset(
    params: &DenseTensor,
    spec: &SynthSpec,
    seed: u64,
) -> Result<OperatorDataset> {
    if params.rank() != 2 || params.cols() != 2 {
        return Err(Error::dim(
            "synthetic parameters",
            "[N, 2]",
            format!("{:?}", params.shape()),
        ));
    }
    if spec.nx < 2 || spec.ny < 2 || !(0.0..0.5).contains(&spec.jitter) || !(spec.steepness >= 0.0)
    {
        return Err(Error::contract(
            "synthetic grid needs nx, ny >= 2, jitter in [0, 0.5) and steepness >= 0",
        ));
    }
    let n = params.rows();
    let pts = spec.nx * spec.ny;
    let mut coords = Vec::with_capacity(n * pts * 2);
    let mut targets = Vec::with_capacity(n * pts);
    for i in 0..n {
        let p = params.row(i);
        for [x, y] in synth_grid(spec, seed, i) {
            coords.extend([x, y]);
            targets.push(synth_field(p, x, y, spec.steepness).0);
        }
    }
    OperatorDataset::new(
        params.clone(),
        DenseTensor::new(vec![n, pts, 2], coords)?,
        DenseTensor::new(vec![n, pts, 1], targets)?,
        None,
    )
}

/// Closed-form gradients `[N, N_pts, 2]` of every sample in `ds`.
pub fn synth_gradients(ds: &OperatorDataset, steepness: f64) -> DenseTensor {
    let mut out = Vec::with_capacity(ds.len() * ds.points() * 2);
    for i in 0..ds.len() {
        let p = ds.branch.row(i);
        let c = ds.sample_coords(i);
        for r in 0..ds.points() {
            out.extend(synth_field(p, c.row(r)[0], c.row(r)[1], steepness).1);
        }
    }
    DenseTensor::new(vec![ds.len(), ds.points(), 2], out).expect("sized")
}
