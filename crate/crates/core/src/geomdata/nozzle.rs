//! Quintic upper wall of the converging-diverging nozzle.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Nozzle length.
pub const NOZZLE_LENGTH: f64 = 10.0;

/// How the inlet/outlet parameters map to wall ordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum HeightConvention {
    /// Full heights are `2 h_i` and `2 h_o`, so the wall sits at `h_i`, `h_o`.
    #[default]
    HalfHeight,
    /// Wall at `h_i / 2` and `h_o / 2`.
    Literal,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NozzleParams {
    pub h_i: f64,
    pub h_o: f64,
    pub x_t: f64,
    pub length: f64,
    pub convention: HeightConvention,
}

impl NozzleParams {
    pub fn new(h_i: f64, h_o: f64, x_t: f64) -> Self {
        Self {
            h_i,
            h_o,
            x_t,
            length: NOZZLE_LENGTH,
            convention: HeightConvention::default(),
        }
    }

    pub fn throat_x(&self) -> f64 {
        10.0 * self.x_t
    }

    /// Wall ordinates at inlet, throat and outlet.
    pub fn ordinates(&self) -> [f64; 3] {
        match self.convention {
            HeightConvention::HalfHeight => [self.h_i, 1.0, self.h_o],
            HeightConvention::Literal => [0.5 * self.h_i, 1.0, 0.5 * self.h_o],
        }
    }

    pub fn abscissae(&self) -> [f64; 3] {
        [0.0, self.throat_x(), self.length]
    }
}

/// `y(x) = sum_k a_k x^k` for the upper wall; the lower wall is `-y`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NozzleWall {
    pub coeffs: [f64; 6],
}

impl NozzleWall {
    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
    }

    pub fn slope(&self, x: f64) -> f64 {
        (1..6)
            .rev()
            .fold(0.0, |acc, k| acc * x + k as f64 * self.coeffs[k])
    }

    pub fn lower(&self, x: f64) -> f64 {
        -self.eval(x)
    }

    /// Value and slope residuals of the six constraints.
    pub fn residuals(&self, p: &NozzleParams) -> [f64; 6] {
        let xs = p.abscissae();
        let ys = p.ordinates();
        let mut r = [0.0; 6];
        for i in 0..3 {
            r[2 * i] = self.eval(xs[i]) - ys[i];
            r[2 * i + 1] = self.slope(xs[i]);
        }
        r
    }
}

/// Unique quintic matching the ordinates with zero slope at inlet, throat and outlet.
pub fn nozzle_coeffs(p: &NozzleParams) -> Result<NozzleWall> {
    let xs = p.abscissae();
    if !(xs[0] < xs[1] && xs[1] < xs[2]) || xs.iter().any(|x| !x.is_finite()) {
        return Err(Error::contract(format!(
            "constraint abscissae {xs:?} must be distinct and increasing"
        )));
    }
    let ys = p.ordinates();
    let mut m = DMatrix::zeros(6, 6);
    let mut rhs = DVector::zeros(6);
    for i in 0..3 {
        for k in 0..6 {
            m[(2 * i, k)] = xs[i].powi(k as i32);
            if k > 0 {
                m[(2 * i + 1, k)] = k as f64 * xs[i].powi(k as i32 - 1);
            }
        }
        rhs[2 * i] = ys[i];
    }
    let sol = m
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::contract("nozzle constraint system is singular"))?;
    let mut coeffs = [0.0; 6];
    coeffs.copy_from_slice(sol.as_slice());
    Ok(NozzleWall { coeffs })
}
