//! Operator-learning datasets and their binary file format.
//!
//! Layout (little-endian): magic `FDON`, `u32` version, `u64` N, N_pts, N_p,
//! N_c, n_v, `u64` flags (bit 0: mask present), then the `f64` arrays
//! branch, coords, targets and (if flagged) mask, all row-major.

use std::path::Path;

use crate::error::{Error, Result};
use crate::tensor::DenseTensor;

pub const MAGIC: [u8; 4] = *b"FDON";
pub const VERSION: u32 = 1;
const HEADER_LEN: usize = 4 + 4 + 6 * 8;

#[derive(Debug, Clone, PartialEq)]
pub struct OperatorDataset {
    /// `[N, N_p]`.
    pub branch: DenseTensor,
    /// `[N, N_pts, N_c]`.
    pub coords: DenseTensor,
    /// `[N, N_pts, n_v]`.
    pub targets: DenseTensor,
    /// `[N, N_pts]` of 0/1.
    pub mask: Option<DenseTensor>,
}

impl OperatorDataset {
    pub fn new(
        branch: DenseTensor,
        coords: DenseTensor,
        targets: DenseTensor,
        mask: Option<DenseTensor>,
    ) -> Result<Self> {
        if branch.rank() != 2 {
            return Err(Error::dim("dataset branch rank", 2, branch.rank()));
        }
        if coords.rank() != 3 || targets.rank() != 3 {
            return Err(Error::dim(
                "dataset coords/targets rank",
                3,
                coords.rank().max(targets.rank()),
            ));
        }
        let n = branch.shape()[0];
        let pts = coords.shape()[1];
        if coords.shape()[0] != n || targets.shape()[0] != n {
            return Err(Error::dim(
                "dataset sample count",
                n,
                format!(
                    "coords {}, targets {}",
                    coords.shape()[0],
                    targets.shape()[0]
                ),
            ));
        }
        if targets.shape()[1] != pts {
            return Err(Error::dim("dataset points", pts, targets.shape()[1]));
        }
        if let Some(m) = &mask {
            if m.shape() != [n, pts] {
                return Err(Error::dim(
                    "dataset mask",
                    format!("[{n}, {pts}]"),
                    format!("{:?}", m.shape()),
                ));
            }
            if m.data().iter().any(|&v| v != 0.0 && v != 1.0) {
                return Err(Error::contract("mask entries must be 0 or 1"));
            }
        }
        branch.ensure_finite("dataset branch")?;
        coords.ensure_finite("dataset coords")?;
        targets.ensure_finite("dataset targets")?;
        Ok(Self {
            branch,
            coords,
            targets,
            mask,
        })
    }

    pub fn len(&self) -> usize {
        self.branch.shape()[0]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn points(&self) -> usize {
        self.coords.shape()[1]
    }

    pub fn n_params(&self) -> usize {
        self.branch.shape()[1]
    }

    pub fn coord_dim(&self) -> usize {
        self.coords.shape()[2]
    }

    pub fn n_vars(&self) -> usize {
        self.targets.shape()[2]
    }

    pub fn sample_coords(&self, i: usize) -> DenseTensor {
        let (p, c) = (self.points(), self.coord_dim());
        DenseTensor::new(
            vec![p, c],
            self.coords.data()[i * p * c..(i + 1) * p * c].to_vec(),
        )
        .expect("sized")
    }

    pub fn sample_targets(&self, i: usize) -> DenseTensor {
        let (p, v) = (self.points(), self.n_vars());
        DenseTensor::new(
            vec![p, v],
            self.targets.data()[i * p * v..(i + 1) * p * v].to_vec(),
        )
        .expect("sized")
    }

    pub fn sample_mask(&self, i: usize) -> Option<&[f64]> {
        let p = self.points();
        self.mask.as_ref().map(|m| &m.data()[i * p..(i + 1) * p])
    }

    /// The common grid `[N_pts, N_c]` if every sample uses bitwise the same coordinates.
    pub fn shared_coords(&self) -> Option<DenseTensor> {
        let stride = self.points() * self.coord_dim();
        let first = self.coords.data().get(..stride)?;
        self.coords
            .data()
            .chunks_exact(stride)
            .all(|c| c.iter().zip(first).all(|(a, b)| a.to_bits() == b.to_bits()))
            .then(|| self.sample_coords(0))
    }

    /// Samples `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        if let Some(&bad) = indices.iter().find(|&&i| i >= self.len()) {
            return Err(Error::contract(format!(
                "sample {bad} out of range for {} samples",
                self.len()
            )));
        }
        let pick = |t: &DenseTensor| -> Result<DenseTensor> {
            let stride = t.len() / t.shape()[0].max(1);
            let mut data = Vec::with_capacity(stride * indices.len());
            for &i in indices {
                data.extend_from_slice(&t.data()[i * stride..(i + 1) * stride]);
            }
            let mut shape = t.shape().to_vec();
            shape[0] = indices.len();
            DenseTensor::new(shape, data)
        };
        Ok(Self {
            branch: pick(&self.branch)?,
            coords: pick(&self.coords)?,
            targets: pick(&self.targets)?,
            mask: self.mask.as_ref().map(pick).transpose()?,
        })
    }
}

/// One sample of an irregular collection before padding.
#[derive(Debug, Clone, PartialEq)]
pub struct IrregularSample {
    pub branch: Vec<f64>,
    /// `[n_i, N_c]`.
    pub coords: DenseTensor,
    /// `[n_i, n_v]`.
    pub targets: DenseTensor,
}

/// Pads every sample to the longest one by repeating its last coordinate and
/// target row; padded rows get mask 0.
pub fn pad_irregular(samples: &[IrregularSample]) -> Result<OperatorDataset> {
    let first = samples
        .first()
        .ok_or_else(|| Error::contract("no samples to pad"))?;
    let (np, nc, nv) = (
        first.branch.len(),
        first.coords.cols(),
        first.targets.cols(),
    );
    let max = samples.iter().map(|s| s.coords.rows()).max().unwrap_or(0);
    let n = samples.len();
    let mut branch = Vec::with_capacity(n * np);
    let mut coords = Vec::with_capacity(n * max * nc);
    let mut targets = Vec::with_capacity(n * max * nv);
    let mut mask = Vec::with_capacity(n * max);
    for (i, s) in samples.iter().enumerate() {
        let len = s.coords.rows();
        if len == 0 || s.coords.rank() != 2 || s.targets.rank() != 2 {
            return Err(Error::contract(format!(
                "sample {i} is empty or not a point list"
            )));
        }
        if s.branch.len() != np
            || s.coords.cols() != nc
            || s.targets.cols() != nv
            || s.targets.rows() != len
        {
            return Err(Error::dim(
                "irregular sample layout",
                format!("N_p {np}, N_c {nc}, n_v {nv}, {len} target rows"),
                format!(
                    "sample {i}: {:?} / {:?} / {}",
                    s.coords.shape(),
                    s.targets.shape(),
                    s.branch.len()
                ),
            ));
        }
        branch.extend_from_slice(&s.branch);
        coords.extend_from_slice(s.coords.data());
        targets.extend_from_slice(s.targets.data());
        mask.extend(std::iter::repeat_n(1.0, len));
        for _ in len..max {
            coords.extend_from_slice(s.coords.row(len - 1));
            targets.extend_from_slice(s.targets.row(len - 1));
        }
        mask.extend(std::iter::repeat_n(0.0, max - len));
    }
    OperatorDataset::new(
        DenseTensor::new(vec![n, np], branch)?,
        DenseTensor::new(vec![n, max, nc], coords)?,
        DenseTensor::new(vec![n, max, nv], targets)?,
        Some(DenseTensor::new(vec![n, max], mask)?),
    )
}

fn put_f64s(buf: &mut Vec<u8>, v: &[f64]) {
    for x in v {
        buf.extend_from_slice(&x.to_le_bytes());
    }
}

/// Serializes `ds` into the byte layout described at module level.
pub fn encode_dataset(ds: &OperatorDataset) -> Vec<u8> {
    let mut buf =
        Vec::with_capacity(HEADER_LEN + 8 * (ds.branch.len() + ds.coords.len() + ds.targets.len()));
    buf.extend_from_slice(&MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    for d in [
        ds.len(),
        ds.points(),
        ds.n_params(),
        ds.coord_dim(),
        ds.n_vars(),
    ] {
        buf.extend_from_slice(&(d as u64).to_le_bytes());
    }
    buf.extend_from_slice(&(ds.mask.is_some() as u64).to_le_bytes());
    put_f64s(&mut buf, ds.branch.data());
    put_f64s(&mut buf, ds.coords.data());
    put_f64s(&mut buf, ds.targets.data());
    if let Some(m) = &ds.mask {
        put_f64s(&mut buf, m.data());
    }
    buf
}

pub fn write_dataset(ds: &OperatorDataset, path: &Path) -> Result<()> {
    std::fs::write(path, encode_dataset(ds)).map_err(|e| Error::io(path, e))
}

/// Little-endian reader over a byte slice that reports truncation against `path`.
pub(crate) struct Cursor<'a> {
    pub(crate) bytes: &'a [u8],
    pub(crate) pos: usize,
    pub(crate) path: &'a Path,
}

impl<'a> Cursor<'a> {
    pub(crate) fn new(bytes: &'a [u8], path: &'a Path) -> Self {
        Self {
            bytes,
            pos: 0,
            path,
        }
    }

    pub(crate) fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or(Error::Truncated {
                path: self.path.to_path_buf(),
                needed: self.pos.saturating_add(n),
                available: self.bytes.len(),
            })?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    pub(crate) fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(
            self.take(4)?.try_into().expect("4 bytes"),
        ))
    }

    pub(crate) fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(
            self.take(8)?.try_into().expect("8 bytes"),
        ))
    }

    pub(crate) fn usize(&mut self) -> Result<usize> {
        let v = self.u64()?;
        usize::try_from(v).map_err(|_| Error::contract(format!("size {v} does not fit in memory")))
    }

    pub(crate) fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        let len = n
            .checked_mul(8)
            .ok_or_else(|| Error::contract("array length overflow"))?;
        Ok(self
            .take(len)?
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect())
    }

    pub(crate) fn magic(&mut self, expected: [u8; 4]) -> Result<()> {
        let m: [u8; 4] = self.take(4)?.try_into().expect("4 bytes");
        if m != expected {
            return Err(Error::BadMagic {
                path: self.path.to_path_buf(),
                expected,
                found: m,
            });
        }
        Ok(())
    }

    pub(crate) fn version(&mut self, expected: u32) -> Result<()> {
        let v = self.u32()?;
        if v != expected {
            return Err(Error::Version {
                path: self.path.to_path_buf(),
                expected,
                found: v,
            });
        }
        Ok(())
    }
}

/// Parses bytes written by [`encode_dataset`]; `path` only labels errors.
pub fn decode_dataset(bytes: &[u8], path: &Path) -> Result<OperatorDataset> {
    let mut c = Cursor::new(bytes, path);
    c.magic(MAGIC)?;
    c.version(VERSION)?;
    let n = c.usize()?;
    let pts = c.usize()?;
    let np = c.usize()?;
    let nc = c.usize()?;
    let nv = c.usize()?;
    let flags = c.u64()?;
    let branch = DenseTensor::new(vec![n, np], c.f64s(n * np)?)?;
    let coords = DenseTensor::new(vec![n, pts, nc], c.f64s(n * pts * nc)?)?;
    let targets = DenseTensor::new(vec![n, pts, nv], c.f64s(n * pts * nv)?)?;
    let mask = if flags & 1 == 1 {
        Some(DenseTensor::new(vec![n, pts], c.f64s(n * pts)?)?)
    } else {
        None
    };
    if c.pos != bytes.len() {
        return Err(Error::contract(format!(
            "{} trailing bytes after dataset payload in {}",
            bytes.len() - c.pos,
            path.display()
        )));
    }
    OperatorDataset::new(branch, coords, targets, mask)
}

pub fn read_dataset(path: &Path) -> Result<OperatorDataset> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_dataset(&bytes, path)
}
