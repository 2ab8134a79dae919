//! Error metrics, trunk-layer spectra, boundary heat flux, gradients at
//! query points and CSV reports.

mod gradient;
mod heatflux;
mod metrics;
mod report;
mod spectrum;

pub use gradient::grad_at_query;
pub use heatflux::{
    chord_normal, circle_boundary, heat_flux_segment, heat_flux_total, BoundaryNodes,
    HeatFluxReport, HeatFluxSegment,
};
pub use metrics::{
    evaluate_model, gradient_magnitude_errors, predict_dataset, rel_l2, rel_l2_report, ErrorReport,
    MetricTransform,
};
pub use report::{export_heatflux, export_report, export_spectrum, export_summary, read_report};
pub use spectrum::{
    layer_svd_spectrum, singular_values, trunk_hidden_outputs, SpectrumEntry, SpectrumReport,
};
