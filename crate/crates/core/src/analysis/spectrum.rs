use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::operators::{fusion_trunk_hidden, trunk_forward, OperatorModel, Variant};
use crate::tensor::DenseTensor;

/// Singular values of one hidden-layer output on one grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumEntry {
    pub layer: usize,
    pub grid: usize,
    /// Non-increasing.
    pub sigma: Vec<f64>,
    /// `sigma_k^2 / sum sigma^2`; all zero for a zero matrix.
    pub energy: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SpectrumReport {
    pub entries: Vec<SpectrumEntry>,
}

/// Sorted singular values of a `[rows, cols]` matrix.
pub fn singular_values(m: &DenseTensor) -> Result<Vec<f64>> {
    if m.rank() != 2 {
        return Err(Error::dim("svd input rank", 2, m.rank()));
    }
    m.ensure_finite("svd input")?;
    let a = DMatrix::from_row_slice(m.rows(), m.cols(), m.data());
    let mut s: Vec<f64> = a.singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    Ok(s)
}

/// Spectra of `(layer, grid, output [points, width])` triples.
pub fn layer_svd_spectrum(outputs: &[(usize, usize, DenseTensor)]) -> Result<SpectrumReport> {
    let mut entries = Vec::with_capacity(outputs.len());
    for (layer, grid, m) in outputs {
        let sigma = singular_values(m)?;
        let total: f64 = sigma.iter().map(|s| s * s).sum();
        let energy = sigma
            .iter()
            .map(|s| if total > 0.0 { s * s / total } else { 0.0 })
            .collect();
        entries.push(SpectrumEntry {
            layer: *layer,
            grid: *grid,
            sigma,
            energy,
        });
    }
    Ok(SpectrumReport { entries })
}

/// Trunk hidden outputs `Y^1..Y^{L-1}` (after conditioning for Fusion) of
/// sample `xb: [1, N_p]` on raw coordinates `grid: [N_pts, N_c]`.
pub fn trunk_hidden_outputs(
    model: &OperatorModel,
    xb: &DenseTensor,
    grid: &DenseTensor,
) -> Result<Vec<DenseTensor>> {
    let xt = model.trunk_input(grid);
    let layers = match model.variant {
        Variant::Fusion => {
            let pts = xt.rows();
            let xt = xt.reshape(&[1, pts, model.config.coord_dim])?;
            fusion_trunk_hidden(&model.params, &model.config, &model.branch_input(xb), &xt)?
        }
        Variant::Vanilla => trunk_forward(&model.params, &model.config, &xt)?,
        Variant::Pod => return Err(Error::contract("the POD variant has no trunk network")),
    };
    let pts = grid.rows();
    layers
        .into_iter()
        .map(|t| {
            let w = t.cols();
            t.reshape(&[pts, w])
        })
        .collect()
}
