use crate::error::{Error, Result};
use crate::netcore::{NetworkParams, Tape, Var};
use crate::operators::network::operator_graph;
use crate::operators::pod::{check_pod_grid, pod_graph, PodBasis};
use crate::operators::FusionConfig;
use crate::tensor::DenseTensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    Fusion,
    Vanilla,
    Pod,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Variant::Fusion => "fusion",
            Variant::Vanilla => "vanilla",
            Variant::Pod => "pod",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "fusion" => Some(Variant::Fusion),
            "vanilla" => Some(Variant::Vanilla),
            "pod" => Some(Variant::Pod),
            _ => None,
        }
    }
}

/// Per-column affine map `normalized = (raw - shift) / scale`.
#[derive(Debug, Clone, PartialEq)]
pub struct Affine {
    pub shift: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Affine {
    pub fn identity(cols: usize) -> Self {
        Self {
            shift: vec![0.0; cols],
            scale: vec![1.0; cols],
        }
    }

    pub fn cols(&self) -> usize {
        self.shift.len()
    }

    /// Maps each column's `[min, max]` onto `[-1, 1]`. Rows with zero weight are ignored.
    pub fn fit_range(data: &DenseTensor, row_weights: Option<&[f64]>) -> Self {
        let c = data.cols();
        let mut lo = vec![f64::INFINITY; c];
        let mut hi = vec![f64::NEG_INFINITY; c];
        for (r, row) in data.data().chunks_exact(c).enumerate() {
            if row_weights.is_some_and(|w| w[r] == 0.0) {
                continue;
            }
            for j in 0..c {
                lo[j] = lo[j].min(row[j]);
                hi[j] = hi[j].max(row[j]);
            }
        }
        let shift = lo.iter().zip(&hi).map(|(a, b)| 0.5 * (a + b)).collect();
        let scale = lo
            .iter()
            .zip(&hi)
            .map(|(a, b)| if b > a { 0.5 * (b - a) } else { 1.0 })
            .collect();
        Self { shift, scale }
    }

    /// Zero mean, unit variance per column. Rows with zero weight are ignored.
    pub fn fit_standard(data: &DenseTensor, row_weights: Option<&[f64]>) -> Self {
        let c = data.cols();
        let mut sum = vec![0.0; c];
        let mut sq = vec![0.0; c];
        let mut count = 0.0;
        for (r, row) in data.data().chunks_exact(c).enumerate() {
            if row_weights.is_some_and(|w| w[r] == 0.0) {
                continue;
            }
            count += 1.0;
            for j in 0..c {
                sum[j] += row[j];
                sq[j] += row[j] * row[j];
            }
        }
        let count = f64::max(count, 1.0);
        let shift: Vec<f64> = sum.iter().map(|s| s / count).collect();
        let scale = sq
            .iter()
            .zip(&shift)
            .map(|(q, m)| {
                let var = (q / count - m * m).max(0.0);
                if var > 0.0 {
                    var.sqrt()
                } else {
                    1.0
                }
            })
            .collect();
        Self { shift, scale }
    }

    pub fn forward(&self, raw: &DenseTensor) -> DenseTensor {
        self.apply(raw, |v, sh, sc| (v - sh) / sc)
    }

    pub fn inverse(&self, normalized: &DenseTensor) -> DenseTensor {
        self.apply(normalized, |v, sh, sc| v * sc + sh)
    }

    fn apply(&self, t: &DenseTensor, f: impl Fn(f64, f64, f64) -> f64) -> DenseTensor {
        let c = t.cols();
        assert_eq!(c, self.cols(), "affine width mismatch");
        let mut out = t.clone();
        for row in out.data_mut().chunks_exact_mut(c) {
            for (j, v) in row.iter_mut().enumerate() {
                *v = f(*v, self.shift[j], self.scale[j]);
            }
        }
        out
    }
}

/// Scalings applied to branch inputs, coordinates and targets before the
/// network sees them.
#[derive(Debug, Clone, PartialEq)]
pub struct Normalization {
    pub branch: Affine,
    pub coords: Affine,
    pub targets: Affine,
}

impl Normalization {
    pub fn identity(cfg: &FusionConfig) -> Self {
        Self {
            branch: Affine::identity(cfg.branch_inputs),
            coords: Affine::identity(cfg.coord_dim),
            targets: Affine::identity(cfg.n_vars),
        }
    }
}

/// A trained-or-trainable operator: architecture, parameters, scalings and
/// (for the POD variant) the fixed basis.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorModel {
    pub variant: Variant,
    pub config: FusionConfig,
    pub params: NetworkParams,
    pub norm: Normalization,
    pub pod: Option<PodBasis>,
}

impl OperatorModel {
    /// Freshly initialised Fusion or Vanilla model.
    pub fn new(variant: Variant, mut config: FusionConfig, norm: Normalization) -> Result<Self> {
        config.validate()?;
        if variant == Variant::Pod {
            return Err(Error::contract(
                "use OperatorModel::new_pod for the POD variant",
            ));
        }
        config.fusion_enabled = variant == Variant::Fusion;
        let params =
            NetworkParams::glorot(&[config.branch_shape(), config.trunk_shape()], config.seed);
        Ok(Self {
            variant,
            config,
            params,
            norm,
            pod: None,
        })
    }

    /// POD model: branch network only, trunk replaced by `basis` (fitted on normalized targets).
    pub fn new_pod(mut config: FusionConfig, basis: PodBasis, norm: Normalization) -> Result<Self> {
        config.validate()?;
        config.fusion_enabled = false;
        config.latent = basis.latent;
        let params = NetworkParams::glorot(&[config.branch_shape()], config.seed);
        Ok(Self {
            variant: Variant::Pod,
            config,
            params,
            norm,
            pod: Some(basis),
        })
    }

    /// Graph of the normalized prediction `[N * N_pts, n_v]` from normalized inputs.
    pub fn graph(&self, tape: &mut Tape, xb: Var, xt: Option<Var>, points: usize) -> Result<Var> {
        match self.variant {
            Variant::Pod => {
                let basis = self
                    .pod
                    .as_ref()
                    .ok_or_else(|| Error::contract("POD model without basis"))?;
                check_pod_grid(basis, points)?;
                pod_graph(tape, &self.params, &self.config, basis, xb)
            }
            _ => {
                let xt = xt.ok_or_else(|| Error::contract("coordinates required"))?;
                operator_graph(tape, &self.params, &self.config, xb, xt, points, None)
            }
        }
    }

    /// Normalized branch input `[N, N_p]`.
    pub fn branch_input(&self, xb: &DenseTensor) -> DenseTensor {
        self.norm.branch.forward(xb)
    }

    /// Normalized coordinates as a `[rows, N_c]` matrix.
    pub fn trunk_input(&self, xt: &DenseTensor) -> DenseTensor {
        let m = xt
            .clone()
            .reshape(&[xt.rows(), xt.cols()])
            .expect("same length");
        self.norm.coords.forward(&m)
    }

    /// Physical-unit prediction `[N, N_pts, n_v]`. `xt` is `[N, N_pts, N_c]`
    /// or, for Vanilla/POD, a shared grid `[N_pts, N_c]`.
    pub fn predict(&self, xb: &DenseTensor, xt: &DenseTensor) -> Result<DenseTensor> {
        if xb.rank() != 2 || xb.cols() != self.config.branch_inputs {
            return Err(Error::dim(
                "predict branch input",
                format!("[N, {}]", self.config.branch_inputs),
                format!("{:?}", xb.shape()),
            ));
        }
        if xt.cols() != self.config.coord_dim {
            return Err(Error::dim(
                "predict coordinates",
                self.config.coord_dim,
                xt.cols(),
            ));
        }
        let n = xb.rows();
        let points = match xt.rank() {
            3 if xt.shape()[0] == n => xt.shape()[1],
            2 => xt.rows(),
            _ => {
                return Err(Error::dim(
                    "predict coordinates",
                    format!("[{n}, N_pts, N_c]"),
                    format!("{:?}", xt.shape()),
                ))
            }
        };
        let mut tape = Tape::new(self.params.len());
        let b = tape.leaf(self.branch_input(xb));
        let coords = if xt.rank() == 2 && self.variant == Variant::Fusion {
            // conditioning is per sample, so replicate the shared grid
            let m = self.trunk_input(xt);
            let mut tiled = Vec::with_capacity(n * m.len());
            for _ in 0..n {
                tiled.extend_from_slice(m.data());
            }
            DenseTensor::new(vec![n * points, m.cols()], tiled)?
        } else {
            self.trunk_input(xt)
        };
        let t = tape.leaf(coords);
        let out = self.graph(&mut tape, b, Some(t), points)?;
        let raw = self.norm.targets.inverse(tape.value(out));
        raw.reshape(&[n, points, self.config.n_vars])
    }
}
