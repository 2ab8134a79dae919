//! Derivative-enhanced loss: field MSE plus a weighted MSE between
//! derivatives of the truth and of the prediction.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::losses::dd::{dd_map, PAIR_EPSILON};
use crate::losses::knn::NeighborTable;
use crate::losses::lsd::{lsd_map, lsd_map_excluding, lsd_map_on_valid};
use crate::losses::mse::mse_masked;
use crate::netcore::{SparseMap, Tape, Var};
use crate::tensor::DenseTensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LossMode {
    MseOnly,
    DelDd,
    DelLsd,
}

impl LossMode {
    pub fn name(self) -> &'static str {
        match self {
            LossMode::MseOnly => "mse-only",
            LossMode::DelDd => "del-dd",
            LossMode::DelLsd => "del-lsd",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "mse-only" | "mse" => Some(LossMode::MseOnly),
            "del-dd" | "dd" => Some(LossMode::DelDd),
            "del-lsd" | "lsd" => Some(LossMode::DelLsd),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossConfig {
    pub lambda1: f64,
    pub mode: LossMode,
    pub k_neighbors: usize,
    pub pair_epsilon: f64,
}

impl Default for LossConfig {
    fn default() -> Self {
        Self {
            lambda1: 0.0,
            mode: LossMode::MseOnly,
            k_neighbors: 6,
            pair_epsilon: PAIR_EPSILON,
        }
    }
}

impl LossConfig {
    pub fn validate(&self, coord_dim: usize) -> Result<()> {
        if !(self.lambda1 >= 0.0) || !self.lambda1.is_finite() {
            return Err(Error::contract(format!(
                "lambda1 must be finite and >= 0, got {}",
                self.lambda1
            )));
        }
        if self.mode == LossMode::DelLsd && self.k_neighbors < coord_dim {
            return Err(Error::contract(format!(
                "k_neighbors = {} is below the coordinate dimension {coord_dim}",
                self.k_neighbors
            )));
        }
        if !(self.pair_epsilon >= 0.0) {
            return Err(Error::contract("pair_epsilon must be >= 0"));
        }
        Ok(())
    }
}

/// Derivative map for one sample, or `None` in MSE-only mode. A supplied
/// table is used as is (rows touching masked points dropped); otherwise LSD
/// neighbours are searched among the valid points.
pub fn derivative_map(
    coords: &DenseTensor,
    mask: Option<&[f64]>,
    cfg: &LossConfig,
    table: Option<&NeighborTable>,
) -> Result<Option<SparseMap>> {
    match cfg.mode {
        LossMode::MseOnly => Ok(None),
        LossMode::DelDd => dd_map(coords, mask, cfg.pair_epsilon).map(Some),
        LossMode::DelLsd => match (table, mask) {
            (Some(t), None) => Ok(Some(lsd_map(t))),
            (Some(t), Some(m)) => lsd_map_excluding(t, m).map(Some),
            (None, _) => lsd_map_on_valid(coords, mask, cfg.k_neighbors).map(Some),
        },
    }
}

fn mean_sq_diff(a: &[f64], b: &[f64]) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>() / a.len() as f64
}

/// Loss of one sample. `pred`/`truth` hold `N_pts` rows of `n_v` values,
/// `coords` is `[N_pts, N_c]`, `mask` has one entry per point. LSD mode
/// needs the neighbour table built on `coords`.
pub fn del_loss(
    pred: &DenseTensor,
    truth: &DenseTensor,
    coords: &DenseTensor,
    mask: Option<&[f64]>,
    cfg: &LossConfig,
    table: Option<&NeighborTable>,
) -> Result<f64> {
    cfg.validate(coords.cols())?;
    let points = coords.rows();
    if !pred.len().is_multiple_of(points) {
        return Err(Error::dim("del_loss values per point", points, pred.len()));
    }
    let width = pred.len() / points;
    let p = pred.clone().reshape(&[points, width])?;
    let t = truth.clone().reshape(&[points, width]).map_err(|_| {
        Error::dim(
            "del_loss truth shape",
            format!("{:?}", pred.shape()),
            format!("{:?}", truth.shape()),
        )
    })?;
    let base = mse_masked(&p, &t, mask)?;
    if cfg.mode == LossMode::DelLsd && table.is_none() {
        return Err(Error::contract("del-lsd mode needs a neighbour table"));
    }
    let Some(map) = derivative_map(coords, mask, cfg, table)? else {
        return Ok(base);
    };
    let dp = map.apply(p.data(), width);
    let dt = map.apply(t.data(), width);
    Ok(base + cfg.lambda1 * mean_sq_diff(&dp, &dt))
}

struct SampleTerm {
    map: Arc<SparseMap>,
    /// Derivatives of the truth, `[map.n_rows, n_v]`.
    truth: Vec<f64>,
}

/// Loss over a fixed dataset with all derivative maps and truth derivatives
/// precomputed, evaluated on minibatches of samples.
pub struct LossPlan {
    cfg: LossConfig,
    points: usize,
    n_vars: usize,
    targets: Vec<f64>,
    mask: Option<Vec<f64>>,
    terms: Vec<SampleTerm>,
}

impl LossPlan {
    /// `targets: [N, N_pts, n_v]`; `coords: [N, N_pts, N_c]` or shared
    /// `[N_pts, N_c]`; `mask`: one entry per point of every sample.
    pub fn new(
        targets: &DenseTensor,
        coords: &DenseTensor,
        mask: Option<&[f64]>,
        cfg: LossConfig,
    ) -> Result<Self> {
        if targets.rank() != 3 {
            return Err(Error::dim("loss targets rank", 3, targets.rank()));
        }
        let (n, points, n_vars) = (targets.shape()[0], targets.shape()[1], targets.shape()[2]);
        let dim = coords.cols();
        cfg.validate(dim)?;
        let shared = match coords.shape() {
            [p, _] if *p == points => true,
            [s, p, _] if *s == n && *p == points => false,
            other => {
                return Err(Error::dim(
                    "loss coords",
                    format!("[{n}, {points}, N_c]"),
                    format!("{other:?}"),
                ));
            }
        };
        if let Some(m) = mask {
            if m.len() != n * points {
                return Err(Error::dim("loss mask length", n * points, m.len()));
            }
        }
        let mut terms = Vec::new();
        if cfg.mode != LossMode::MseOnly {
            let sample_coords = |i: usize| -> Result<DenseTensor> {
                let start = if shared { 0 } else { i * points * dim };
                DenseTensor::new(
                    vec![points, dim],
                    coords.data()[start..start + points * dim].to_vec(),
                )
            };
            // shared grids: one neighbour search, masks handled by dropping rows
            let shared_table = if shared && cfg.mode == LossMode::DelLsd {
                Some(crate::losses::knn::knn_neighbors(
                    &sample_coords(0)?,
                    cfg.k_neighbors,
                )?)
            } else {
                None
            };
            let mut unmasked: Option<Arc<SparseMap>> = None;
            for i in 0..n {
                let m = mask.map(|m| &m[i * points..(i + 1) * points]);
                let all_valid = m.is_none_or(|m| m.iter().all(|&v| v != 0.0));
                let map = match (&unmasked, shared && all_valid) {
                    (Some(map), true) => map.clone(),
                    _ => {
                        let c = sample_coords(i)?;
                        let m = if all_valid { None } else { m };
                        let map = Arc::new(
                            derivative_map(&c, m, &cfg, shared_table.as_ref())?
                                .expect("derivative mode"),
                        );
                        if shared && all_valid {
                            unmasked = Some(map.clone());
                        }
                        map
                    }
                };
                let t = &targets.data()[i * points * n_vars..(i + 1) * points * n_vars];
                let truth = map.apply(t, n_vars);
                terms.push(SampleTerm { map, truth });
            }
        }
        Ok(Self {
            cfg,
            points,
            n_vars,
            targets: targets.data().to_vec(),
            mask: mask.map(|m| m.to_vec()),
            terms,
        })
    }

    pub fn config(&self) -> &LossConfig {
        &self.cfg
    }

    pub fn samples(&self) -> usize {
        self.targets.len() / (self.points * self.n_vars)
    }

    /// Number of derivative rows of sample `i`.
    pub fn derivative_rows(&self, i: usize) -> usize {
        self.terms.get(i).map_or(0, |t| t.map.n_rows)
    }

    /// Records the loss of `pred: [batch.len() * N_pts, n_v]`, the stacked
    /// predictions for samples `batch`.
    pub fn loss_graph(&self, tape: &mut Tape, pred: Var, batch: &[usize]) -> Result<Var> {
        let (pts, nv) = (self.points, self.n_vars);
        let shape = tape.value(pred).shape().to_vec();
        if shape != [batch.len() * pts, nv] {
            return Err(Error::dim(
                "loss prediction",
                format!("[{}, {nv}]", batch.len() * pts),
                format!("{shape:?}"),
            ));
        }
        let n = self.samples();
        if let Some(&bad) = batch.iter().find(|&&i| i >= n) {
            return Err(Error::contract(format!(
                "sample index {bad} out of range for {n} samples"
            )));
        }
        let mut target = Vec::with_capacity(batch.len() * pts * nv);
        for &i in batch {
            target.extend_from_slice(&self.targets[i * pts * nv..(i + 1) * pts * nv]);
        }
        let weights = self.mask.as_ref().map(|m| {
            Arc::new(
                batch
                    .iter()
                    .flat_map(|&i| m[i * pts..(i + 1) * pts].iter().copied())
                    .collect::<Vec<f64>>(),
            )
        });
        let target = Arc::new(DenseTensor::new(vec![batch.len() * pts, nv], target)?);
        let base = tape.squared_error(pred, target, weights, (batch.len() * pts * nv) as f64)?;
        if self.terms.is_empty() || self.cfg.lambda1 == 0.0 {
            return Ok(base);
        }
        let mut map = SparseMap::empty(0);
        let mut truth = Vec::new();
        for &i in batch {
            map.append_block(&self.terms[i].map);
            truth.extend_from_slice(&self.terms[i].truth);
        }
        if map.n_rows == 0 {
            return Ok(base);
        }
        let rows = map.n_rows;
        let d = tape.linear_map(pred, Arc::new(map))?;
        let truth = Arc::new(DenseTensor::new(vec![rows, nv], truth)?);
        let dterm = tape.squared_error(d, truth, None, (rows * nv) as f64)?;
        let dterm = tape.scale(dterm, self.cfg.lambda1);
        tape.add(base, dterm)
    }

    /// Value of the loss for stacked predictions of `batch`.
    pub fn evaluate(&self, pred: &DenseTensor, batch: &[usize]) -> Result<f64> {
        let mut tape = Tape::new(0);
        let p = tape.leaf(pred.clone());
        let l = self.loss_graph(&mut tape, p, batch)?;
        Ok(tape.value(l).data()[0])
    }
}
