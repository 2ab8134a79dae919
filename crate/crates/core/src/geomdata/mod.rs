//! Geometry generators, sampling designs, exact shock-tube solutions,
//! synthetic fields and the dataset container with its file format.

mod dataset;
mod ellipse;
mod leblanc;
mod lhs;
mod nozzle;
mod riemann;
mod synth;
mod tables;

pub(crate) use dataset::Cursor;
pub use dataset::{
    decode_dataset, encode_dataset, pad_irregular, read_dataset, write_dataset, IrregularSample,
    OperatorDataset, MAGIC, VERSION,
};
pub use ellipse::{ellipse_mask, EllipseParams, UniformGrid, A_RANGE, B_RANGE, FREE_STREAM};
pub use leblanc::{leblanc_cases, leblanc_dataset, split_indices, to_physical, LeblancSpec};
pub use lhs::{lhs_sample, stratum};
pub use nozzle::{nozzle_coeffs, HeightConvention, NozzleParams, NozzleWall, NOZZLE_LENGTH};
pub use riemann::{riemann_exact, sample, star_state, Primitive, RiemannState, StarState, Wave};
pub use synth::{
    synth_field, synth_field_dataset, synth_gradients, synth_grid, SynthSpec, SYNTH_RANGES,
};
pub use tables::{
    write_param_csv, write_rows_csv, ParamTable, CAPSULE_TEST, CAPSULE_TRAIN, ELLIPSE_TEST,
    ELLIPSE_TRAIN, NOZZLE_TEST, NOZZLE_TRAIN,
};
