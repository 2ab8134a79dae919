//! Shock-tube dataset: exact solutions over a range of left pressures.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geomdata::dataset::OperatorDataset;
use crate::geomdata::riemann::{riemann_exact, RiemannState};
use crate::tensor::DenseTensor;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LeblancSpec {
    pub cases: usize,
    pub train: usize,
    pub points: usize,
    pub t_f: f64,
    pub p_range: (f64, f64),
}

impl Default for LeblancSpec {
    fn default() -> Self {
        Self {
            cases: 500,
            train: 400,
            points: 512,
            t_f: 1e-4,
            p_range: (1e9, 1e10),
        }
    }
}

impl LeblancSpec {
    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.p_range;
        if self.cases < 2 || self.train == 0 || self.train >= self.cases {
            return Err(Error::contract(format!(
                "need 0 < train < cases with cases >= 2 (cases={}, train={})",
                self.cases, self.train
            )));
        }
        if self.points < 2 || !(self.t_f > 0.0) || !(lo > 0.0 && hi > lo) {
            return Err(Error::contract(
                "leblanc grid, time and pressure range must be positive and non-degenerate",
            ));
        }
        Ok(())
    }

    /// Equispaced left pressures including both ends.
    pub fn pressures(&self) -> Vec<f64> {
        let (lo, hi) = self.p_range;
        (0..self.cases)
            .map(|i| lo + (hi - lo) * i as f64 / (self.cases - 1) as f64)
            .collect()
    }

    /// Equispaced nodes on `[-20, 20]`.
    pub fn grid(&self) -> Vec<f64> {
        (0..self.points)
            .map(|i| -20.0 + 40.0 * i as f64 / (self.points - 1) as f64)
            .collect()
    }

    /// `log10(p_l)` mapped linearly so the pressure range becomes `[0, 1]`.
    pub fn branch_value(&self, p_l: f64) -> f64 {
        let (lo, hi) = self.p_range;
        (p_l.log10() - lo.log10()) / (hi.log10() - lo.log10())
    }
}

/// Seeded random split of `0..n` into `train` and the rest, each sorted.
pub fn split_indices(n: usize, train: usize, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let (mut a, mut b) = (idx[..train].to_vec(), idx[train..].to_vec());
    a.sort_unstable();
    b.sort_unstable();
    (a, b)
}

/// All cases with targets `(ln rho, u, ln p)`, before splitting.
pub fn leblanc_cases(spec: &LeblancSpec) -> Result<OperatorDataset> {
    spec.validate()?;
    let x = spec.grid();
    let n = spec.cases;
    let mut branch = Vec::with_capacity(n);
    let mut coords = Vec::with_capacity(n * x.len());
    let mut targets = Vec::with_capacity(n * x.len() * 3);
    for p_l in spec.pressures() {
        let s = RiemannState::leblanc(p_l);
        branch.push(spec.branch_value(p_l));
        coords.extend_from_slice(&x);
        for w in riemann_exact(&s, &x, spec.t_f)? {
            targets.extend([w.rho.ln(), w.u, w.p.ln()]);
        }
    }
    OperatorDataset::new(
        DenseTensor::new(vec![n, 1], branch)?,
        DenseTensor::new(vec![n, x.len(), 1], coords)?,
        DenseTensor::new(vec![n, x.len(), 3], targets)?,
        None,
    )
}

/// `(train, test)` datasets.
pub fn leblanc_dataset(
    spec: &LeblancSpec,
    seed: u64,
) -> Result<(OperatorDataset, OperatorDataset)> {
    let all = leblanc_cases(spec)?;
    let (tr, te) = split_indices(spec.cases, spec.train, seed);
    Ok((all.subset(&tr)?, all.subset(&te)?))
}

/// Undoes the log transform of density and pressure (variables 0 and 2).
pub fn to_physical(targets: &DenseTensor) -> Result<DenseTensor> {
    if targets.cols() != 3 {
        return Err(Error::dim("shock-tube variables", 3, targets.cols()));
    }
    let mut out = targets.clone();
    for row in out.data_mut().chunks_exact_mut(3) {
        row[0] = row[0].exp();
        row[2] = row[2].exp();
    }
    Ok(out)
}
