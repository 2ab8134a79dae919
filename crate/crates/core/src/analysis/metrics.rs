use crate::error::{Error, Result};
use crate::geomdata::OperatorDataset;
use crate::losses::lsd_map_on_valid;
use crate::operators::OperatorModel;
use crate::tensor::DenseTensor;

/// `100 * |pred - truth| / |truth|` in the Euclidean norm.
pub fn rel_l2(pred: &[f64], truth: &[f64]) -> Result<f64> {
    if pred.len() != truth.len() {
        return Err(Error::dim("rel_l2 length", truth.len(), pred.len()));
    }
    let num: f64 = pred.iter().zip(truth).map(|(p, t)| (p - t) * (p - t)).sum();
    let den: f64 = truth.iter().map(|t| t * t).sum();
    if !(den > 0.0) {
        return Err(Error::contract(
            "relative error against a zero-norm reference",
        ));
    }
    Ok(100.0 * (num / den).sqrt())
}

/// Per-sample, per-variable relative errors with their averages.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorReport {
    /// `[N][n_v]` percentages.
    pub per_sample: Vec<Vec<f64>>,
    /// Sample-wise mean for each variable.
    pub per_var: Vec<f64>,
    /// Mean of `per_var`.
    pub aggregate: f64,
}

/// Sample-wise relative errors of `pred` against `truth`, both
/// `[N, N_pts, n_v]`. Points with zero mask are left out.
pub fn rel_l2_report(
    pred: &DenseTensor,
    truth: &DenseTensor,
    mask: Option<&DenseTensor>,
) -> Result<ErrorReport> {
    if pred.shape() != truth.shape() || truth.rank() != 3 {
        return Err(Error::dim(
            "rel_l2 report shapes",
            format!("{:?}", truth.shape()),
            format!("{:?}", pred.shape()),
        ));
    }
    let (n, pts, nv) = (truth.shape()[0], truth.shape()[1], truth.shape()[2]);
    if let Some(m) = mask {
        if m.len() != n * pts {
            return Err(Error::dim("rel_l2 mask", n * pts, m.len()));
        }
    }
    let mut per_sample = Vec::with_capacity(n);
    let mut p = Vec::with_capacity(pts);
    let mut t = Vec::with_capacity(pts);
    for i in 0..n {
        let mut row = Vec::with_capacity(nv);
        for v in 0..nv {
            p.clear();
            t.clear();
            for q in 0..pts {
                if mask.is_some_and(|m| m.data()[i * pts + q] == 0.0) {
                    continue;
                }
                let k = (i * pts + q) * nv + v;
                p.push(pred.data()[k]);
                t.push(truth.data()[k]);
            }
            row.push(rel_l2(&p, &t)?);
        }
        per_sample.push(row);
    }
    let per_var: Vec<f64> = (0..nv)
        .map(|v| per_sample.iter().map(|r| r[v]).sum::<f64>() / n.max(1) as f64)
        .collect();
    let aggregate = per_var.iter().sum::<f64>() / nv.max(1) as f64;
    Ok(ErrorReport {
        per_sample,
        per_var,
        aggregate,
    })
}

/// Maps stored targets to the units errors are reported in.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct MetricTransform {
    /// Variables stored as natural logarithms.
    pub exp_vars: Vec<usize>,
}

impl MetricTransform {
    pub fn apply(&self, t: &DenseTensor) -> DenseTensor {
        if self.exp_vars.is_empty() {
            return t.clone();
        }
        let nv = t.cols();
        let mut out = t.clone();
        for row in out.data_mut().chunks_exact_mut(nv) {
            for &v in &self.exp_vars {
                row[v] = row[v].exp();
            }
        }
        out
    }
}

/// Predictions `[N, N_pts, n_v]` of `model` on every sample of `ds`, in
/// chunks of `chunk` samples.
pub fn predict_dataset(
    model: &OperatorModel,
    ds: &OperatorDataset,
    chunk: usize,
) -> Result<DenseTensor> {
    let chunk = chunk.max(1);
    let (pts, nv) = (ds.points(), model.config.n_vars);
    let mut out = Vec::with_capacity(ds.len() * pts * nv);
    let shared = ds.shared_coords();
    let mut start = 0;
    while start < ds.len() {
        let idx: Vec<usize> = (start..(start + chunk).min(ds.len())).collect();
        let part = ds.subset(&idx)?;
        let pred = match (&shared, model.variant) {
            (Some(grid), crate::operators::Variant::Vanilla | crate::operators::Variant::Pod) => {
                model.predict(&part.branch, grid)?
            }
            _ => model.predict(&part.branch, &part.coords)?,
        };
        out.extend_from_slice(pred.data());
        start += chunk;
    }
    DenseTensor::new(vec![ds.len(), pts, nv], out)
}

/// Errors of `model` on `ds` after `transform` is applied to both sides.
pub fn evaluate_model(
    model: &OperatorModel,
    ds: &OperatorDataset,
    transform: &MetricTransform,
) -> Result<ErrorReport> {
    if ds.n_vars() != model.config.n_vars {
        return Err(Error::dim(
            "dataset variables",
            model.config.n_vars,
            ds.n_vars(),
        ));
    }
    let pred = predict_dataset(model, ds, 32)?;
    rel_l2_report(
        &transform.apply(&pred),
        &transform.apply(&ds.targets),
        ds.mask.as_ref(),
    )
}

/// Per-sample relative error (%) of the gradient magnitude of variable `var`,
/// with both `pred` and the dataset targets differentiated by the same LSD
/// operator (`k` neighbours among each sample's valid points).
pub fn gradient_magnitude_errors(
    pred: &DenseTensor,
    ds: &OperatorDataset,
    var: usize,
    k: usize,
) -> Result<Vec<f64>> {
    if pred.shape() != ds.targets.shape() {
        return Err(Error::dim(
            "gradient error prediction",
            format!("{:?}", ds.targets.shape()),
            format!("{:?}", pred.shape()),
        ));
    }
    let (pts, nv, dim) = (ds.points(), ds.n_vars(), ds.coord_dim());
    if var >= nv {
        return Err(Error::contract(format!(
            "variable {var} out of range for {nv} outputs"
        )));
    }
    let magnitudes = |field: &[f64], map: &crate::netcore::SparseMap| -> Vec<f64> {
        map.apply(field, 1)
            .chunks(dim)
            .map(|g| g.iter().map(|x| x * x).sum::<f64>().sqrt())
            .collect()
    };
    (0..ds.len())
        .map(|i| {
            let map = lsd_map_on_valid(&ds.sample_coords(i), ds.sample_mask(i), k)?;
            let column = |t: &DenseTensor| -> Vec<f64> {
                (0..pts)
                    .map(|q| t.data()[(i * pts + q) * nv + var])
                    .collect()
            };
            rel_l2(
                &magnitudes(&column(pred), &map),
                &magnitudes(&column(&ds.targets), &map),
            )
        })
        .collect()
}
