//! Fixed parameter sets of the training and testing cases.

use std::path::Path;

use crate::error::{Error, Result};

/// Semi-ellipse `(a, b)` training cases.
pub const ELLIPSE_TRAIN: [[f64; 2]; 28] = [
    [2.78, 0.70],
    [1.05, 0.88],
    [1.57, 1.03],
    [0.77, 1.66],
    [2.27, 0.64],
    [0.66, 1.20],
    [2.99, 0.90],
    [0.63, 1.15],
    [2.89, 1.26],
    [1.51, 1.69],
    [2.08, 0.74],
    [1.90, 1.39],
    [2.18, 1.75],
    [2.56, 1.59],
    [1.10, 1.50],
    [1.15, 1.55],
    [1.27, 1.30],
    [0.53, 0.53],
    [2.72, 1.53],
    [2.46, 1.00],
    [1.69, 1.78],
    [2.84, 1.08],
    [1.35, 0.59],
    [1.85, 0.54],
    [2.36, 1.09],
    [1.62, 0.84],
    [1.21, 1.44],
    [1.79, 1.40],
];

/// Semi-ellipse `(a, b)` testing cases.
pub const ELLIPSE_TEST: [[f64; 2]; 8] = [
    [0.90, 0.80],
    [2.64, 1.36],
    [1.44, 1.16],
    [0.80, 0.94],
    [2.41, 1.25],
    [0.98, 1.63],
    [2.10, 0.76],
    [2.00, 0.68],
];

/// Capsule `(R, alpha [deg], Mach)` training cases.
pub const CAPSULE_TRAIN: [[f64; 3]; 48] = [
    [19.05, 50.56, 6.97],
    [18.61, 42.64, 6.06],
    [16.46, 51.94, 7.40],
    [13.80, 52.22, 5.72],
    [19.93, 45.29, 5.79],
    [17.14, 57.07, 5.83],
    [13.21, 40.90, 6.66],
    [16.35, 47.57, 6.60],
    [18.44, 42.24, 7.93],
    [15.35, 58.15, 6.85],
    [16.59, 57.58, 5.00],
    [15.61, 56.70, 5.27],
    [13.08, 52.46, 5.31],
    [19.50, 41.78, 5.56],
    [19.81, 47.85, 5.21],
    [17.37, 46.63, 5.45],
    [13.59, 49.99, 5.88],
    [15.08, 49.07, 7.87],
    [14.29, 57.90, 5.42],
    [13.70, 51.21, 6.50],
    [13.47, 41.35, 6.42],
    [13.37, 40.35, 5.14],
    [17.60, 58.94, 7.23],
    [14.70, 59.20, 6.74],
    [19.60, 42.95, 7.47],
    [17.76, 55.01, 6.26],
    [18.00, 48.95, 6.49],
    [18.88, 45.86, 6.92],
    [17.09, 54.38, 7.06],
    [16.22, 41.18, 5.17],
    [18.80, 45.39, 6.36],
    [19.24, 48.12, 8.00],
    [19.76, 53.95, 7.52],
    [14.94, 59.68, 7.13],
    [16.84, 52.97, 7.34],
    [16.66, 50.92, 7.85],
    [19.18, 58.51, 5.64],
    [16.06, 46.03, 7.63],
    [15.84, 55.70, 6.16],
    [15.39, 43.37, 6.89],
    [14.19, 51.65, 5.67],
    [14.56, 43.68, 6.13],
    [18.12, 47.01, 7.56],
    [14.37, 46.97, 7.00],
    [18.70, 56.24, 6.62],
    [17.53, 55.51, 6.04],
    [15.17, 54.85, 5.09],
    [13.97, 50.32, 7.73],
];

/// Capsule `(R, alpha [deg], Mach)` testing cases.
pub const CAPSULE_TEST: [[f64; 3]; 12] = [
    [15.79, 53.26, 7.78],
    [14.89, 43.10, 6.33],
    [18.29, 44.97, 7.28],
    [14.59, 44.40, 6.24],
    [17.87, 49.40, 5.54],
    [16.18, 40.07, 5.97],
    [15.54, 44.30, 6.77],
    [14.02, 48.62, 7.19],
    [19.33, 53.46, 5.37],
    [18.20, 59.52, 5.95],
    [17.25, 54.19, 7.36],
    [16.92, 56.39, 7.68],
];

/// Nozzle `(h_i, h_o, x_t)` training cases.
pub const NOZZLE_TRAIN: [[f64; 3]; 42] = [
    [3.86, 2.03, 0.58],
    [3.80, 1.63, 0.52],
    [3.49, 2.10, 0.61],
    [3.11, 2.11, 0.50],
    [3.99, 1.76, 0.50],
    [3.59, 2.35, 0.51],
    [3.02, 1.54, 0.56],
    [3.47, 1.88, 0.56],
    [3.78, 1.61, 0.65],
    [3.33, 2.41, 0.57],
    [3.51, 2.38, 0.45],
    [3.37, 2.33, 0.47],
    [3.00, 2.12, 0.47],
    [3.93, 1.59, 0.49],
    [3.97, 1.89, 0.46],
    [3.62, 1.83, 0.48],
    [3.08, 2.00, 0.51],
    [3.29, 1.95, 0.64],
    [3.18, 2.39, 0.48],
    [3.09, 2.06, 0.55],
    [3.06, 1.57, 0.54],
    [3.04, 1.52, 0.46],
    [3.65, 2.45, 0.60],
    [3.24, 2.46, 0.57],
    [3.94, 1.65, 0.61],
    [3.68, 2.25, 0.53],
    [3.71, 1.95, 0.55],
    [3.84, 1.79, 0.58],
    [3.58, 2.22, 0.59],
    [3.46, 1.56, 0.46],
    [3.83, 1.77, 0.54],
    [3.89, 1.91, 0.65],
    [3.97, 2.20, 0.62],
    [3.27, 2.48, 0.59],
    [3.54, 2.15, 0.61],
    [3.52, 2.05, 0.64],
    [3.88, 2.43, 0.49],
    [3.43, 1.80, 0.63],
    [3.40, 2.29, 0.53],
    [3.34, 1.67, 0.58],
    [3.16, 2.08, 0.49],
    [3.22, 1.68, 0.53],
];

/// Nozzle `(h_i, h_o, x_t)` testing cases.
#[allow(clippy::approx_constant)]
pub const NOZZLE_TEST: [[f64; 3]; 18] = [
    [3.73, 1.85, 0.62],
    [3.19, 1.85, 0.58],
    [3.81, 2.31, 0.56],
    [3.64, 2.28, 0.52],
    [3.30, 2.24, 0.46],
    [3.13, 2.02, 0.63],
    [3.39, 2.16, 0.64],
    [3.26, 1.66, 0.54],
    [3.75, 1.75, 0.60],
    [3.22, 1.72, 0.53],
    [3.69, 1.97, 0.49],
    [3.45, 1.50, 0.51],
    [3.36, 1.71, 0.57],
    [3.14, 1.93, 0.60],
    [3.90, 2.17, 0.47],
    [3.74, 2.48, 0.51],
    [3.60, 2.21, 0.61],
    [3.56, 2.32, 0.63],
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamTable {
    Ellipse,
    Capsule,
    Nozzle,
}

impl ParamTable {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "ellipse" => Some(Self::Ellipse),
            "capsule" => Some(Self::Capsule),
            "nozzle" => Some(Self::Nozzle),
            _ => None,
        }
    }

    pub fn columns(self) -> &'static [&'static str] {
        match self {
            Self::Ellipse => &["a", "b"],
            Self::Capsule => &["R", "alpha", "Ma"],
            Self::Nozzle => &["h_i", "h_o", "x_t"],
        }
    }

    /// `(train, test)` rows.
    pub fn rows(self) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        fn v<const D: usize>(t: &[[f64; D]]) -> Vec<Vec<f64>> {
            t.iter().map(|r| r.to_vec()).collect()
        }
        match self {
            Self::Ellipse => (v(&ELLIPSE_TRAIN), v(&ELLIPSE_TEST)),
            Self::Capsule => (v(&CAPSULE_TRAIN), v(&CAPSULE_TEST)),
            Self::Nozzle => (v(&NOZZLE_TRAIN), v(&NOZZLE_TEST)),
        }
    }
}

/// Writes `split,case,<columns...>` with cases numbered from 1 within each split.
pub fn write_param_csv(table: ParamTable, path: &Path) -> Result<()> {
    write_rows_csv(table.columns(), &table.rows().0, &table.rows().1, path)
}

/// Same layout for arbitrary train/test parameter rows.
pub fn write_rows_csv(
    columns: &[&str],
    train: &[Vec<f64>],
    test: &[Vec<f64>],
    path: &Path,
) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(file);
    let mut header = vec!["split".to_string(), "case".to_string()];
    header.extend(columns.iter().map(|c| c.to_string()));
    w.write_record(&header)?;
    for (split, rows) in [("train", train), ("test", test)] {
        for (i, r) in rows.iter().enumerate() {
            let mut rec = vec![split.to_string(), (i + 1).to_string()];
            rec.extend(r.iter().map(|x| x.to_string()));
            w.write_record(&rec)?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}
