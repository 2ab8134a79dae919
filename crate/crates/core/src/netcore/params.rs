use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::tensor::DenseTensor;

/// Which sub-network a parameter block belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Subnet {
    Branch,
    Trunk,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ParamKind {
    Weight,
    Bias,
    Rowdy,
}

/// One contiguous block of the flat parameter vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParamEntry {
    pub subnet: Subnet,
    /// 1-based layer index.
    pub layer: usize,
    pub kind: ParamKind,
    pub offset: usize,
    pub shape: Vec<usize>,
}

impl ParamEntry {
    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Description of a stack of dense layers: widths `[n_0, n_1, .., n_L]`, with
/// a Rowdy activation (of `harmonics` coefficients) after every layer but the last.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpShape {
    pub subnet: Subnet,
    pub widths: Vec<usize>,
    pub harmonics: usize,
}

/// Structured view of one layer.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerParams {
    pub weight: DenseTensor,
    pub bias: DenseTensor,
    pub rowdy: Option<Vec<f64>>,
}

/// Weights, biases and Rowdy coefficients of all sub-networks, stored flat.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkParams {
    flat: Vec<f64>,
    layout: Vec<ParamEntry>,
}

impl NetworkParams {
    /// Zero-filled parameters with the layout implied by `mlps`.
    pub fn zeros(mlps: &[MlpShape]) -> Self {
        let mut layout = Vec::new();
        let mut offset = 0;
        for mlp in mlps {
            let depth = mlp.widths.len() - 1;
            for l in 1..=depth {
                let (n_in, n_out) = (mlp.widths[l - 1], mlp.widths[l]);
                let mut push = |kind, shape: Vec<usize>| {
                    let len: usize = shape.iter().product();
                    layout.push(ParamEntry {
                        subnet: mlp.subnet,
                        layer: l,
                        kind,
                        offset,
                        shape,
                    });
                    offset += len;
                };
                push(ParamKind::Weight, vec![n_in, n_out]);
                push(ParamKind::Bias, vec![n_out]);
                if l < depth && mlp.harmonics > 0 {
                    push(ParamKind::Rowdy, vec![mlp.harmonics]);
                }
            }
        }
        Self {
            flat: vec![0.0; offset],
            layout,
        }
    }

    /// Glorot-uniform weights, zero biases, zero Rowdy coefficients.
    pub fn glorot(mlps: &[MlpShape], seed: u64) -> Self {
        let mut p = Self::zeros(mlps);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for e in &p.layout {
            if e.kind == ParamKind::Weight {
                let limit = (6.0 / (e.shape[0] + e.shape[1]) as f64).sqrt();
                for v in &mut p.flat[e.offset..e.offset + e.len()] {
                    *v = rng.random_range(-limit..limit);
                }
            }
        }
        p
    }

    pub fn from_flat(flat: Vec<f64>, template: &NetworkParams) -> Result<Self> {
        if flat.len() != template.flat.len() {
            return Err(Error::dim(
                "NetworkParams::from_flat",
                template.flat.len(),
                flat.len(),
            ));
        }
        Ok(Self {
            flat,
            layout: template.layout.clone(),
        })
    }

    pub fn flat(&self) -> &[f64] {
        &self.flat
    }

    pub fn flat_mut(&mut self) -> &mut [f64] {
        &mut self.flat
    }

    pub fn len(&self) -> usize {
        self.flat.len()
    }

    pub fn is_empty(&self) -> bool {
        self.flat.is_empty()
    }

    pub fn layout(&self) -> &[ParamEntry] {
        &self.layout
    }

    pub fn entry(&self, subnet: Subnet, layer: usize, kind: ParamKind) -> Option<&ParamEntry> {
        self.layout
            .iter()
            .find(|e| e.subnet == subnet && e.layer == layer && e.kind == kind)
    }

    pub fn slice(&self, e: &ParamEntry) -> &[f64] {
        &self.flat[e.offset..e.offset + e.len()]
    }

    pub fn depth(&self, subnet: Subnet) -> usize {
        self.layout
            .iter()
            .filter(|e| e.subnet == subnet)
            .map(|e| e.layer)
            .max()
            .unwrap_or(0)
    }

    /// Structured copy of one sub-network's layers, in order.
    pub fn unflatten(&self, subnet: Subnet) -> Vec<LayerParams> {
        (1..=self.depth(subnet))
            .map(|l| {
                let get = |kind| self.entry(subnet, l, kind);
                let w = get(ParamKind::Weight).expect("every layer has a weight");
                let b = get(ParamKind::Bias).expect("every layer has a bias");
                LayerParams {
                    weight: DenseTensor::new(w.shape.clone(), self.slice(w).to_vec())
                        .expect("layout shape"),
                    bias: DenseTensor::new(b.shape.clone(), self.slice(b).to_vec())
                        .expect("layout shape"),
                    rowdy: get(ParamKind::Rowdy).map(|r| self.slice(r).to_vec()),
                }
            })
            .collect()
    }

    /// Writes structured layers back into the flat vector.
    pub fn flatten_from(&mut self, subnet: Subnet, layers: &[LayerParams]) -> Result<()> {
        if layers.len() != self.depth(subnet) {
            return Err(Error::dim(
                "flatten_from depth",
                self.depth(subnet),
                layers.len(),
            ));
        }
        for (i, lp) in layers.iter().enumerate() {
            let l = i + 1;
            let mut write = |kind, data: &[f64]| -> Result<()> {
                let e = self
                    .entry(subnet, l, kind)
                    .cloned()
                    .ok_or_else(|| Error::contract(format!("no {kind:?} block at layer {l}")))?;
                if e.len() != data.len() {
                    return Err(Error::dim("flatten_from block", e.len(), data.len()));
                }
                self.flat[e.offset..e.offset + e.len()].copy_from_slice(data);
                Ok(())
            };
            write(ParamKind::Weight, lp.weight.data())?;
            write(ParamKind::Bias, lp.bias.data())?;
            if let Some(r) = &lp.rowdy {
                write(ParamKind::Rowdy, r)?;
            }
        }
        Ok(())
    }
}
