use crate::error::{Error, Result};
use crate::netcore::Tape;
use crate::operators::{OperatorModel, Variant};
use crate::tensor::DenseTensor;

/// Exact gradient of each physical output variable with respect to the
/// physical query coordinates, `[Q, n_v, N_c]`, for one branch input
/// `xb: [1, N_p]` and `query: [Q, N_c]`.
pub fn grad_at_query(
    model: &OperatorModel,
    xb: &DenseTensor,
    query: &DenseTensor,
) -> Result<DenseTensor> {
    if model.variant == Variant::Pod {
        return Err(Error::contract(
            "the POD variant is defined on its training grid only",
        ));
    }
    if xb.rank() != 2 || xb.rows() != 1 {
        return Err(Error::dim(
            "grad_at_query branch input",
            "[1, N_p]",
            format!("{:?}", xb.shape()),
        ));
    }
    let cfg = &model.config;
    if query.rank() != 2 || query.cols() != cfg.coord_dim {
        return Err(Error::dim(
            "grad_at_query points",
            format!("[Q, {}]", cfg.coord_dim),
            format!("{:?}", query.shape()),
        ));
    }
    let (q, nc, nv) = (query.rows(), cfg.coord_dim, cfg.n_vars);
    let mut tape = Tape::new(model.params.len());
    let b = tape.leaf(model.branch_input(xb));
    let t = tape.leaf(model.trunk_input(query));
    let out = model.graph(&mut tape, b, Some(t), q)?;
    let mut grads = DenseTensor::zeros(&[q, nv, nc]);
    for v in 0..nv {
        let mut seed = DenseTensor::zeros(&[q, nv]);
        for r in 0..q {
            seed.set(&[r, v], 1.0);
        }
        let g = tape.backward_seeded(out, seed)?;
        let dx = g
            .wrt(t)
            .ok_or_else(|| Error::contract("coordinates did not reach the output"))?;
        // each output row depends on its own coordinate row only
        for r in 0..q {
            for c in 0..nc {
                let chain = model.norm.targets.scale[v] / model.norm.coords.scale[c];
                grads.set(&[r, v, c], dx.get(&[r, c]) * chain);
            }
        }
    }
    Ok(grads)
}
