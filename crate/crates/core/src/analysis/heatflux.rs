use std::f64::consts::TAU;

use crate::error::{Error, Result};

/// One boundary segment with its quadrature nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct HeatFluxSegment {
    pub nodes: Vec<[f64; 2]>,
    /// Unit normals at the nodes.
    pub normals: Vec<[f64; 2]>,
    /// `grad T . n` at the nodes.
    pub dtdn: Vec<f64>,
    /// Arclength of each node from the first, by chord lengths.
    pub s: Vec<f64>,
    pub kappa: f64,
}

impl HeatFluxSegment {
    pub fn new(
        nodes: Vec<[f64; 2]>,
        normals: Vec<[f64; 2]>,
        dtdn: Vec<f64>,
        kappa: f64,
    ) -> Result<Self> {
        let mut s = Vec::with_capacity(nodes.len());
        let mut acc = 0.0;
        for (i, n) in nodes.iter().enumerate() {
            if i > 0 {
                let p = nodes[i - 1];
                acc += ((n[0] - p[0]).powi(2) + (n[1] - p[1]).powi(2)).sqrt();
            }
            s.push(acc);
        }
        let seg = Self {
            nodes,
            normals,
            dtdn,
            s,
            kappa,
        };
        seg.validate()?;
        Ok(seg)
    }

    /// Builds `grad T . n` from full gradients at the nodes.
    pub fn from_gradients(
        nodes: Vec<[f64; 2]>,
        normals: Vec<[f64; 2]>,
        grads: &[[f64; 2]],
        kappa: f64,
    ) -> Result<Self> {
        if grads.len() != normals.len() {
            return Err(Error::dim("segment gradients", normals.len(), grads.len()));
        }
        let dtdn = grads
            .iter()
            .zip(&normals)
            .map(|(g, n)| g[0] * n[0] + g[1] * n[1])
            .collect();
        Self::new(nodes, normals, dtdn, kappa)
    }

    pub fn length(&self) -> f64 {
        self.s.last().copied().unwrap_or(0.0)
    }

    pub fn validate(&self) -> Result<()> {
        let q = self.nodes.len();
        if q < 2 {
            return Err(Error::contract(format!(
                "a segment needs at least 2 nodes, got {q}"
            )));
        }
        if self.normals.len() != q || self.dtdn.len() != q || self.s.len() != q {
            return Err(Error::dim(
                "segment node arrays",
                q,
                format!(
                    "normals {}, values {}, arclength {}",
                    self.normals.len(),
                    self.dtdn.len(),
                    self.s.len()
                ),
            ));
        }
        if let Some(n) = self
            .normals
            .iter()
            .find(|n| ((n[0] * n[0] + n[1] * n[1]).sqrt() - 1.0).abs() > 1e-12)
        {
            return Err(Error::contract(format!("normal {n:?} is not unit length")));
        }
        if self.s.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::contract(
                "segment arclength must increase strictly along the nodes",
            ));
        }
        Ok(())
    }
}

/// `-kappa * integral (grad T . n) ds` by the trapezoid rule on the nodes.
pub fn heat_flux_segment(seg: &HeatFluxSegment) -> Result<f64> {
    seg.validate()?;
    let integral: f64 = (1..seg.s.len())
        .map(|i| 0.5 * (seg.s[i] - seg.s[i - 1]) * (seg.dtdn[i] + seg.dtdn[i - 1]))
        .sum();
    Ok(-seg.kappa * integral)
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct HeatFluxReport {
    pub total: f64,
    pub per_segment: Vec<f64>,
}

pub fn heat_flux_total(segments: &[HeatFluxSegment]) -> Result<HeatFluxReport> {
    let per_segment = segments
        .iter()
        .map(heat_flux_segment)
        .collect::<Result<Vec<f64>>>()?;
    Ok(HeatFluxReport {
        total: per_segment.iter().sum(),
        per_segment,
    })
}

/// Node positions and outward unit normals of one boundary segment.
pub type BoundaryNodes = (Vec<[f64; 2]>, Vec<[f64; 2]>);

/// Nodes and outward normals of a circle split into `segments` arcs of
/// `nodes` equally spaced points each (neighbouring arcs share end points).
pub fn circle_boundary(
    center: [f64; 2],
    radius: f64,
    segments: usize,
    nodes: usize,
) -> Vec<BoundaryNodes> {
    let per = (nodes.max(2) - 1) as f64;
    (0..segments)
        .map(|k| {
            (0..nodes)
                .map(|j| {
                    let th = TAU * (k as f64 + j as f64 / per) / segments as f64;
                    let (s, c) = th.sin_cos();
                    ([center[0] + radius * c, center[1] + radius * s], [c, s])
                })
                .unzip()
        })
        .collect()
}

/// Left-hand unit perpendicular of the chord `a -> b`.
pub fn chord_normal(a: [f64; 2], b: [f64; 2]) -> [f64; 2] {
    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
    let l = (dx * dx + dy * dy).sqrt();
    [-dy / l, dx / l]
}
