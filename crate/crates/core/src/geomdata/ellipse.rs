//! Semi-elliptic blunt bodies on a uniform Cartesian grid.

use crate::error::{Error, Result};
use crate::tensor::DenseTensor;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EllipseParams {
    pub a: f64,
    pub b: f64,
}

pub const A_RANGE: (f64, f64) = (0.5, 3.0);
pub const B_RANGE: (f64, f64) = (0.5, 1.8);

impl EllipseParams {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(A_RANGE.0..=A_RANGE.1).contains(&a) || !(B_RANGE.0..=B_RANGE.1).contains(&b) {
            return Err(Error::contract(format!(
                "ellipse axes (a={a}, b={b}) outside [{}, {}] x [{}, {}]",
                A_RANGE.0, A_RANGE.1, B_RANGE.0, B_RANGE.1
            )));
        }
        Ok(Self { a, b })
    }

    /// Inside the body: `x <= 0` and `(x/a)^2 + (y/b)^2 <= 1`.
    pub fn contains(&self, x: f64, y: f64) -> bool {
        x <= 0.0 && (x / self.a).powi(2) + (y / self.b).powi(2) <= 1.0
    }
}

/// Free-stream state of the original blunt-body simulations, kept as metadata.
pub const FREE_STREAM: [(&str, f64); 5] = [
    ("mach", 10.0),
    ("rho", 1.4),
    ("u", -10.0),
    ("v", 0.0),
    ("p", 1.0),
];

/// Uniform node grid over a rectangle, `x` varying fastest.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniformGrid {
    pub x: (f64, f64),
    pub y: (f64, f64),
    pub nx: usize,
    pub ny: usize,
}

impl UniformGrid {
    /// 256 x 256 nodes over `[-4.5, 1] x [-4, 4]`.
    pub fn ellipse_default() -> Self {
        Self {
            x: (-4.5, 1.0),
            y: (-4.0, 4.0),
            nx: 256,
            ny: 256,
        }
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn axis(lo: f64, hi: f64, n: usize, i: usize) -> f64 {
        if n == 1 {
            0.5 * (lo + hi)
        } else {
            lo + (hi - lo) * i as f64 / (n - 1) as f64
        }
    }

    pub fn node(&self, k: usize) -> (f64, f64) {
        let (i, j) = (k % self.nx, k / self.nx);
        (
            Self::axis(self.x.0, self.x.1, self.nx, i),
            Self::axis(self.y.0, self.y.1, self.ny, j),
        )
    }

    /// `[nx * ny, 2]`.
    pub fn points(&self) -> DenseTensor {
        let data = (0..self.len()).flat_map(|k| {
            let (x, y) = self.node(k);
            [x, y]
        });
        DenseTensor::new(vec![self.len(), 2], data.collect()).expect("sized")
    }

    pub fn cell_area(&self) -> f64 {
        (self.x.1 - self.x.0) / (self.nx - 1) as f64 * (self.y.1 - self.y.0) / (self.ny - 1) as f64
    }
}

/// 0 at grid nodes inside the semi-ellipse, 1 elsewhere.
pub fn ellipse_mask(params: &EllipseParams, grid: &UniformGrid) -> Vec<f64> {
    (0..grid.len())
        .map(|k| {
            let (x, y) = grid.node(k);
            if params.contains(x, y) {
                0.0
            } else {
                1.0
            }
        })
        .collect()
}
