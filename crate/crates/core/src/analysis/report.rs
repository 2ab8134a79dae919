//! CSV exports.
//!
//! * errors: `sample,variable,rel_l2`
//! * spectra: `layer,grid,mode,sigma,energy`
//! * heat flux: `segment,flux`, with a final `total` row

use std::fs::File;
use std::path::Path;

use crate::analysis::{ErrorReport, HeatFluxReport, SpectrumReport};
use crate::error::{Error, Result};

fn writer(path: &Path) -> Result<csv::Writer<File>> {
    let f = File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::Writer::from_writer(f))
}

fn finish(mut w: csv::Writer<File>, path: &Path) -> Result<()> {
    w.flush().map_err(|e| Error::io(path, e))
}

/// One row per (sample, variable); `names` label the variables.
pub fn export_report(report: &ErrorReport, names: &[&str], path: &Path) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["sample", "variable", "rel_l2"])?;
    for (i, row) in report.per_sample.iter().enumerate() {
        for (v, e) in row.iter().enumerate() {
            let name = names
                .get(v)
                .map_or_else(|| format!("v{v}"), |s| s.to_string());
            w.write_record([i.to_string(), name, e.to_string()])?;
        }
    }
    finish(w, path)
}

/// Per-variable means and the aggregate: `variable,mean_rel_l2`.
pub fn export_summary(report: &ErrorReport, names: &[&str], path: &Path) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["variable", "mean_rel_l2"])?;
    for (v, e) in report.per_var.iter().enumerate() {
        let name = names
            .get(v)
            .map_or_else(|| format!("v{v}"), |s| s.to_string());
        w.write_record([name, e.to_string()])?;
    }
    w.write_record(["aggregate".to_string(), report.aggregate.to_string()])?;
    finish(w, path)
}

/// Reads back `(sample, variable, rel_l2)` rows written by [`export_report`].
pub fn read_report(path: &Path) -> Result<Vec<(usize, String, f64)>> {
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = csv::Reader::from_reader(f);
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let bad = || Error::contract(format!("malformed row in {}", path.display()));
        let sample = rec.get(0).and_then(|s| s.parse().ok()).ok_or_else(bad)?;
        let var = rec.get(1).ok_or_else(bad)?.to_string();
        let e = rec.get(2).and_then(|s| s.parse().ok()).ok_or_else(bad)?;
        out.push((sample, var, e));
    }
    Ok(out)
}

pub fn export_spectrum(report: &SpectrumReport, path: &Path) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["layer", "grid", "mode", "sigma", "energy"])?;
    for e in &report.entries {
        for (k, (s, en)) in e.sigma.iter().zip(&e.energy).enumerate() {
            w.write_record([
                e.layer.to_string(),
                e.grid.to_string(),
                k.to_string(),
                s.to_string(),
                en.to_string(),
            ])?;
        }
    }
    finish(w, path)
}

pub fn export_heatflux(report: &HeatFluxReport, path: &Path) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["segment", "flux"])?;
    for (i, q) in report.per_segment.iter().enumerate() {
        w.write_record([i.to_string(), q.to_string()])?;
    }
    w.write_record(["total".to_string(), report.total.to_string()])?;
    finish(w, path)
}
