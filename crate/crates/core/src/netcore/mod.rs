//! Numerical substrate: activations, parameters, reverse-mode gradients and
//! the optimizer.

mod activation;
mod optim;
mod params;
mod tape;

pub use activation::{rowdy_forward, RowdyActivation, DEFAULT_HARMONICS, DEFAULT_SCALE};
pub use optim::{adam_step, lr_at, AdamState, LrSchedule};
pub use params::{LayerParams, MlpShape, NetworkParams, ParamEntry, ParamKind, Subnet};
pub use tape::{Gradients, LatentDotSpec, SparseMap, Tape, Var};

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::DenseTensor;

    #[test]
    fn half_square_gradient() {
        let theta = [3.0];
        let mut tape = Tape::new(1);
        let t = tape.param(&theta, 0, &[1]);
        let sq = tape.mul(t, t).unwrap();
        let loss = tape.scale(sq, 0.5);
        let g = tape.backward(loss).unwrap();
        assert_eq!(g.params, vec![3.0]);
    }

    #[test]
    fn constant_loss_has_zero_gradient() {
        let theta = [1.0, 2.0];
        let mut tape = Tape::new(2);
        let _ = tape.param(&theta, 0, &[2]);
        let c = tape.leaf(DenseTensor::scalar(4.0));
        let loss = tape.scale(c, 2.0);
        let g = tape.backward(loss).unwrap();
        assert_eq!(g.params, vec![0.0, 0.0]);
    }

    #[test]
    fn non_scalar_loss_is_rejected() {
        let mut tape = Tape::new(0);
        let x = tape.leaf(DenseTensor::zeros(&[2, 2]));
        assert!(matches!(tape.backward(x), Err(crate::Error::Contract(_))));
    }
}
