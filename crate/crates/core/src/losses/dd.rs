//! Directional differences between consecutive points in storage order.

use crate::error::{Error, Result};
use crate::netcore::SparseMap;
use crate::tensor::DenseTensor;

/// Default minimum pair distance; padded duplicates fall below it.
pub const PAIR_EPSILON: f64 = 1e-12;

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// The DD operator as a linear map over point values: one row
/// `(phi_i - phi_{i+1}) / |x_i - x_{i+1}|` per usable consecutive pair.
/// Pairs closer than `epsilon`, or touching a point with zero mask, are skipped.
pub fn dd_map(coords: &DenseTensor, mask: Option<&[f64]>, epsilon: f64) -> Result<SparseMap> {
    if coords.rank() != 2 {
        return Err(Error::dim("dd coords rank", 2, coords.rank()));
    }
    let n = coords.rows();
    if n < 2 {
        return Err(Error::contract(format!(
            "dd needs at least 2 points, got {n}"
        )));
    }
    if let Some(m) = mask {
        if m.len() != n {
            return Err(Error::dim("dd mask length", n, m.len()));
        }
    }
    let mut map = SparseMap::empty(n);
    for i in 0..n - 1 {
        if mask.is_some_and(|m| m[i] == 0.0 || m[i + 1] == 0.0) {
            continue;
        }
        let d = dist(coords.row(i), coords.row(i + 1));
        if !(d >= epsilon) {
            continue;
        }
        map.push_row([(i, 1.0 / d), (i + 1, -1.0 / d)]);
    }
    if map.n_rows == 0 {
        return Err(Error::contract("every dd pair is degenerate"));
    }
    Ok(map)
}

/// Per-pair directional differences of a scalar field.
pub fn dd_operator(field: &[f64], coords: &DenseTensor, epsilon: f64) -> Result<Vec<f64>> {
    if field.len() != coords.rows() {
        return Err(Error::dim("dd field length", coords.rows(), field.len()));
    }
    Ok(dd_map(coords, None, epsilon)?.apply(field, 1))
}
