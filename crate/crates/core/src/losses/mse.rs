use crate::error::{Error, Result};
use crate::tensor::DenseTensor;

/// Mean of `mask * (pred - truth)^2` over every entry. The mask either
/// matches `pred` entry for entry or has one value per row (broadcast over
/// the trailing axis).
pub fn mse_masked(pred: &DenseTensor, truth: &DenseTensor, mask: Option<&[f64]>) -> Result<f64> {
    if pred.shape() != truth.shape() {
        return Err(Error::dim(
            "mse truth shape",
            format!("{:?}", pred.shape()),
            format!("{:?}", truth.shape()),
        ));
    }
    if pred.is_empty() {
        return Err(Error::contract("mse of an empty tensor"));
    }
    let c = pred.cols();
    let weight: Box<dyn Fn(usize) -> f64> = match mask {
        None => Box::new(|_| 1.0),
        Some(m) if m.len() == pred.len() => Box::new(move |i| m[i]),
        Some(m) if m.len() == pred.rows() => Box::new(move |i| m[i / c]),
        Some(m) => return Err(Error::dim("mse mask length", pred.len(), m.len())),
    };
    let total: f64 = pred
        .data()
        .iter()
        .zip(truth.data())
        .enumerate()
        .map(|(i, (p, t))| weight(i) * (p - t) * (p - t))
        .sum();
    Ok(total / pred.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(x: &[f64]) -> DenseTensor {
        DenseTensor::new(vec![x.len()], x.to_vec()).unwrap()
    }

    #[test]
    fn examples() {
        assert_eq!(
            mse_masked(&v(&[1.0, 2.0]), &v(&[1.0, 2.0]), None).unwrap(),
            0.0
        );
        assert_eq!(
            mse_masked(&v(&[1.0, 2.0]), &v(&[0.0, 0.0]), Some(&[0.0, 0.0])).unwrap(),
            0.0
        );
        assert_eq!(
            mse_masked(&v(&[1.0, 2.0]), &v(&[0.0, 0.0]), Some(&[1.0, 0.0])).unwrap(),
            0.5
        );
        assert_eq!(
            mse_masked(&v(&[1.0, 2.0]), &v(&[0.0, 0.0]), None).unwrap(),
            2.5
        );
    }

    #[test]
    fn row_mask_broadcasts() {
        let p = DenseTensor::from_rows(&[&[1.0, 1.0], &[2.0, 2.0]]).unwrap();
        let t = DenseTensor::zeros(&[2, 2]);
        assert_eq!(mse_masked(&p, &t, Some(&[0.0, 1.0])).unwrap(), 8.0 / 4.0);
    }

    #[test]
    fn shape_mismatch() {
        assert!(mse_masked(&v(&[1.0]), &v(&[1.0, 2.0]), None).is_err());
        assert!(mse_masked(&v(&[1.0, 2.0]), &v(&[1.0, 2.0]), Some(&[1.0, 1.0, 1.0])).is_err());
    }
}
