use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::tensor::DenseTensor;

/// Latin hypercube design: `n` rows, one per equal-width stratum in every
/// dimension, uniformly placed inside its stratum.
pub fn lhs_sample(ranges: &[(f64, f64)], n: usize, seed: u64) -> Result<DenseTensor> {
    if n == 0 {
        return Err(Error::contract("latin hypercube needs at least one sample"));
    }
    if let Some((lo, hi)) = ranges
        .iter()
        .find(|(lo, hi)| !(hi > lo) || !lo.is_finite() || !hi.is_finite())
    {
        return Err(Error::contract(format!(
            "degenerate sampling interval [{lo}, {hi}]"
        )));
    }
    let dims = ranges.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = vec![0.0; n * dims];
    let mut strata: Vec<usize> = (0..n).collect();
    for (d, &(lo, hi)) in ranges.iter().enumerate() {
        strata.shuffle(&mut rng);
        let width = (hi - lo) / n as f64;
        for (row, &s) in strata.iter().enumerate() {
            let u: f64 = rng.random();
            out[row * dims + d] = (lo + (s as f64 + u) * width).min(hi);
        }
    }
    DenseTensor::new(vec![n, dims], out)
}

/// Stratum index of `v` within `[lo, hi]` split into `n` equal cells.
pub fn stratum(v: f64, lo: f64, hi: f64, n: usize) -> usize {
    (((v - lo) / (hi - lo) * n as f64).floor() as usize).min(n - 1)
}
