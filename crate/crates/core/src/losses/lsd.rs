//! Least-squares differentiation on scattered points: a local linear model
//! fitted over each point's nearest neighbours.

use crate::error::{Error, Result};
use crate::losses::knn::{knn_neighbors, NeighborTable};
use crate::netcore::SparseMap;
use crate::tensor::DenseTensor;

/// Per-point gradient estimate with its provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientEstimate {
    /// `[N_pts, N_c]`.
    pub grads: DenseTensor,
    pub k: usize,
    /// `[N_pts * k]`.
    pub neighbors: Vec<usize>,
    pub rank: Vec<usize>,
}

impl GradientEstimate {
    /// Points whose neighbourhood did not span all coordinate directions.
    pub fn rank_deficient(&self) -> Vec<usize> {
        let dim = self.grads.cols();
        (0..self.rank.len())
            .filter(|&i| self.rank[i] < dim)
            .collect()
    }
}

/// `g_i = pinv(A_i) b_i` with `b_i[j] = u(x_{i_j}) - u(x_i)`.
pub fn lsd_gradient(
    field: &[f64],
    coords: &DenseTensor,
    table: &NeighborTable,
) -> Result<GradientEstimate> {
    let n = coords.rows();
    if table.len() != n || coords.cols() != table.dim {
        return Err(Error::dim(
            "lsd table vs coords",
            format!("{} points x {}", table.len(), table.dim),
            format!("{} points x {}", n, coords.cols()),
        ));
    }
    if field.len() != n {
        return Err(Error::dim("lsd field length", n, field.len()));
    }
    let (k, dim) = (table.k, table.dim);
    let mut grads = Vec::with_capacity(n * dim);
    for i in 0..n {
        let nb = table.neighbors_of(i);
        let pinv = table.pinv_of(i);
        for d in 0..dim {
            let row = &pinv[d * k..(d + 1) * k];
            grads.push(
                row.iter()
                    .zip(nb)
                    .map(|(w, &j)| w * (field[j] - field[i]))
                    .sum(),
            );
        }
    }
    Ok(GradientEstimate {
        grads: DenseTensor::new(vec![n, dim], grads)?,
        k,
        neighbors: table.neighbors.clone(),
        rank: table.rank.clone(),
    })
}

/// `D_v u = g . v` at every point; `v` must be a unit vector.
pub fn directional_derivative(grad: &GradientEstimate, v: &[f64]) -> Result<Vec<f64>> {
    let dim = grad.grads.cols();
    if v.len() != dim {
        return Err(Error::dim("direction length", dim, v.len()));
    }
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > 1e-12 {
        return Err(Error::contract(format!(
            "direction must be a unit vector, |v| = {norm}"
        )));
    }
    Ok((0..grad.grads.rows())
        .map(|i| grad.grads.row(i).iter().zip(v).map(|(g, d)| g * d).sum())
        .collect())
}

/// The LSD gradient as a linear map from point values to `[N_pts * N_c]`
/// derivative rows (point-major, one row per axis direction).
pub fn lsd_map(table: &NeighborTable) -> SparseMap {
    let (k, dim) = (table.k, table.dim);
    let mut map = SparseMap::empty(table.len());
    for i in 0..table.len() {
        let nb = table.neighbors_of(i);
        let pinv = table.pinv_of(i);
        for d in 0..dim {
            let row = &pinv[d * k..(d + 1) * k];
            let self_w: f64 = -row.iter().sum::<f64>();
            map.push_row(
                std::iter::once((i, self_w)).chain(nb.iter().copied().zip(row.iter().copied())),
            );
        }
    }
    map
}

/// [`lsd_map`] without the rows of points that are masked out or have a
/// masked neighbour.
pub fn lsd_map_excluding(table: &NeighborTable, mask: &[f64]) -> Result<SparseMap> {
    if mask.len() != table.len() {
        return Err(Error::dim("lsd mask length", table.len(), mask.len()));
    }
    let full = lsd_map(table);
    let mut map = SparseMap::empty(table.len());
    for i in 0..table.len() {
        if mask[i] == 0.0 || table.neighbors_of(i).iter().any(|&j| mask[j] == 0.0) {
            continue;
        }
        for d in 0..table.dim {
            let r = i * table.dim + d;
            let span = full.row_ptr[r]..full.row_ptr[r + 1];
            map.push_row(
                full.col_idx[span.clone()]
                    .iter()
                    .copied()
                    .zip(full.values[span].iter().copied()),
            );
        }
    }
    Ok(map)
}

/// LSD map over the unmasked points only: neighbours are searched among
/// valid points, and columns refer back to the full point list.
pub fn lsd_map_on_valid(coords: &DenseTensor, mask: Option<&[f64]>, k: usize) -> Result<SparseMap> {
    let n = coords.rows();
    let valid: Vec<usize> = match mask {
        Some(m) if m.len() != n => return Err(Error::dim("lsd mask length", n, m.len())),
        Some(m) => (0..n).filter(|&i| m[i] != 0.0).collect(),
        None => (0..n).collect(),
    };
    let dim = coords.cols();
    let sub = if valid.len() == n {
        coords.clone()
    } else {
        let data = valid
            .iter()
            .flat_map(|&i| coords.row(i).iter().copied())
            .collect();
        DenseTensor::new(vec![valid.len(), dim], data)?
    };
    let local = lsd_map(&knn_neighbors(&sub, k)?);
    let mut map = SparseMap::empty(n);
    for r in 0..local.n_rows {
        let span = local.row_ptr[r]..local.row_ptr[r + 1];
        map.push_row(
            local.col_idx[span.clone()]
                .iter()
                .map(|&c| valid[c])
                .zip(local.values[span].iter().copied()),
        );
    }
    Ok(map)
}
