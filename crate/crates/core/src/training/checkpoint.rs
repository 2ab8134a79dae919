//! Checkpoint files: model architecture, scalings, parameters, optional POD
//! basis and optional optimizer state, in the same little-endian framing as
//! dataset files (see `docs/checkpoint-format.md`).

use std::path::Path;

use crate::analysis::MetricTransform;
use crate::error::{Error, Result};
use crate::geomdata::Cursor;
use crate::netcore::{AdamState, NetworkParams};
use crate::operators::{Affine, FusionConfig, Normalization, OperatorModel, PodBasis, Variant};
use crate::tensor::DenseTensor;

pub const CHECKPOINT_MAGIC: [u8; 4] = *b"FDCK";
pub const CHECKPOINT_VERSION: u32 = 1;

const FLAG_POD: u64 = 1;
const FLAG_STATE: u64 = 2;

/// Optimizer progress needed to continue a run exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainState {
    pub epoch: u64,
    pub adam: AdamState,
    pub best_metric: f64,
    pub best_epoch: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub model: OperatorModel,
    pub transform: MetricTransform,
    pub state: Option<TrainState>,
}

struct Buf(Vec<u8>);

impl Buf {
    fn u64(&mut self, v: u64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn f64(&mut self, v: f64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn f64s(&mut self, v: &[f64]) {
        self.u64(v.len() as u64);
        for x in v {
            self.f64(*x);
        }
    }
    fn affine(&mut self, a: &Affine) {
        self.f64s(&a.shift);
        self.f64s(&a.scale);
    }
}

fn variant_code(v: Variant) -> u64 {
    match v {
        Variant::Fusion => 0,
        Variant::Vanilla => 1,
        Variant::Pod => 2,
    }
}

pub fn encode_checkpoint(ck: &Checkpoint) -> Vec<u8> {
    let m = &ck.model;
    let c = &m.config;
    let mut b = Buf(Vec::new());
    b.0.extend_from_slice(&CHECKPOINT_MAGIC);
    b.0.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
    b.u64(variant_code(m.variant));
    for v in [
        c.layers,
        c.width,
        c.branch_inputs,
        c.coord_dim,
        c.n_vars,
        c.latent,
        c.harmonics,
    ] {
        b.u64(v as u64);
    }
    b.u64(c.fusion_enabled as u64);
    b.u64(c.condition_last_hidden as u64);
    b.f64(c.rowdy_scale);
    b.u64(c.seed);
    b.affine(&m.norm.branch);
    b.affine(&m.norm.coords);
    b.affine(&m.norm.targets);
    b.u64(ck.transform.exp_vars.len() as u64);
    for &v in &ck.transform.exp_vars {
        b.u64(v as u64);
    }
    b.f64s(m.params.flat());
    let flags = if m.pod.is_some() { FLAG_POD } else { 0 }
        | if ck.state.is_some() { FLAG_STATE } else { 0 };
    b.u64(flags);
    if let Some(p) = &m.pod {
        b.u64(p.points as u64);
        b.u64(p.latent as u64);
        b.u64(p.n_vars as u64);
        b.f64s(p.mean.data());
        b.f64s(p.modes.data());
        for s in &p.singular_values {
            b.f64s(s);
        }
    }
    if let Some(s) = &ck.state {
        b.u64(s.epoch);
        b.u64(s.adam.step);
        b.f64(s.adam.beta1);
        b.f64(s.adam.beta2);
        b.f64(s.adam.eps);
        b.f64s(&s.adam.m);
        b.f64s(&s.adam.v);
        b.f64(s.best_metric);
        b.u64(s.best_epoch);
    }
    b.0
}

fn f64_vec(c: &mut Cursor) -> Result<Vec<f64>> {
    let n = c.usize()?;
    c.f64s(n)
}

fn affine(c: &mut Cursor, cols: usize, what: &'static str) -> Result<Affine> {
    let shift = f64_vec(c)?;
    let scale = f64_vec(c)?;
    if shift.len() != cols || scale.len() != cols {
        return Err(Error::dim(
            what,
            cols,
            format!("{} / {}", shift.len(), scale.len()),
        ));
    }
    Ok(Affine { shift, scale })
}

fn flag(c: &mut Cursor) -> Result<bool> {
    match c.u64()? {
        0 => Ok(false),
        1 => Ok(true),
        v => Err(Error::contract(format!(
            "invalid boolean {v} in checkpoint"
        ))),
    }
}

pub fn decode_checkpoint(bytes: &[u8], path: &Path) -> Result<Checkpoint> {
    let mut c = Cursor::new(bytes, path);
    c.magic(CHECKPOINT_MAGIC)?;
    c.version(CHECKPOINT_VERSION)?;
    let variant = match c.u64()? {
        0 => Variant::Fusion,
        1 => Variant::Vanilla,
        2 => Variant::Pod,
        v => return Err(Error::contract(format!("unknown model variant {v}"))),
    };
    let mut dims = [0usize; 7];
    for d in &mut dims {
        *d = c.usize()?;
    }
    let [layers, width, branch_inputs, coord_dim, n_vars, latent, harmonics] = dims;
    let config = FusionConfig {
        layers,
        width,
        branch_inputs,
        coord_dim,
        n_vars,
        latent,
        harmonics,
        fusion_enabled: flag(&mut c)?,
        condition_last_hidden: flag(&mut c)?,
        rowdy_scale: f64::from_bits(c.u64()?),
        seed: c.u64()?,
    };
    config.validate()?;
    let norm = Normalization {
        branch: affine(&mut c, branch_inputs, "checkpoint branch scaling")?,
        coords: affine(&mut c, coord_dim, "checkpoint coordinate scaling")?,
        targets: affine(&mut c, n_vars, "checkpoint target scaling")?,
    };
    let n_exp = c.usize()?;
    let mut exp_vars = Vec::with_capacity(n_exp.min(n_vars));
    for _ in 0..n_exp {
        let v = c.usize()?;
        if v >= n_vars {
            return Err(Error::contract(format!("log variable {v} out of range")));
        }
        exp_vars.push(v);
    }
    let flat = f64_vec(&mut c)?;
    let flags = c.u64()?;
    let template = if variant == Variant::Pod {
        NetworkParams::zeros(&[config.branch_shape()])
    } else {
        NetworkParams::zeros(&[config.branch_shape(), config.trunk_shape()])
    };
    let params = NetworkParams::from_flat(flat, &template)?;
    let pod = if flags & FLAG_POD != 0 {
        let points = c.usize()?;
        let latent = c.usize()?;
        let nv = c.usize()?;
        let mean = DenseTensor::new(vec![points, nv], f64_vec(&mut c)?)?;
        let modes = DenseTensor::new(vec![points, nv * latent], f64_vec(&mut c)?)?;
        let singular_values = (0..nv)
            .map(|_| f64_vec(&mut c))
            .collect::<Result<Vec<_>>>()?;
        Some(PodBasis {
            points,
            latent,
            n_vars: nv,
            mean,
            modes,
            singular_values,
        })
    } else {
        None
    };
    if (variant == Variant::Pod) != pod.is_some() {
        return Err(Error::contract(
            "POD basis present exactly when the variant is POD",
        ));
    }
    let state = if flags & FLAG_STATE != 0 {
        let epoch = c.u64()?;
        let step = c.u64()?;
        let (beta1, beta2, eps) = (
            f64::from_bits(c.u64()?),
            f64::from_bits(c.u64()?),
            f64::from_bits(c.u64()?),
        );
        let m = f64_vec(&mut c)?;
        let v = f64_vec(&mut c)?;
        if m.len() != params.len() || v.len() != params.len() {
            return Err(Error::dim(
                "checkpoint optimizer moments",
                params.len(),
                m.len(),
            ));
        }
        let best_metric = f64::from_bits(c.u64()?);
        let best_epoch = c.u64()?;
        Some(TrainState {
            epoch,
            adam: AdamState {
                m,
                v,
                step,
                beta1,
                beta2,
                eps,
            },
            best_metric,
            best_epoch,
        })
    } else {
        None
    };
    if c.pos != bytes.len() {
        return Err(Error::contract(format!(
            "trailing bytes in checkpoint {}",
            path.display()
        )));
    }
    Ok(Checkpoint {
        model: OperatorModel {
            variant,
            config,
            params,
            norm,
            pod,
        },
        transform: MetricTransform { exp_vars },
        state,
    })
}

pub fn save_checkpoint(ck: &Checkpoint, path: &Path) -> Result<()> {
    // write then rename so an interrupted save never clobbers the previous file
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, encode_checkpoint(ck)).map_err(|e| Error::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_checkpoint(&bytes, path)
}
