use ndarray::{Array2, ArrayView2, Zip};

use crate::error::{Error, Result};

/// Mean squared error over every element, with its gradient 2(p - t)/N.
pub fn mse_loss(predictions: ArrayView2<f64>, targets: ArrayView2<f64>) -> Result<(f64, Array2<f64>)> {
    if predictions.dim() != targets.dim() {
        return Err(Error::ShapeMismatch(format!(
            "predictions {:?} vs targets {:?}",
            predictions.dim(),
            targets.dim()
        )));
    }
    let n = predictions.len();
    if n == 0 {
        return Err(Error::ShapeMismatch("empty prediction batch".into()));
    }
    let scale = 2.0 / n as f64;
    let mut grad = Array2::zeros(predictions.dim());
    let mut sum = 0.0;
    Zip::from(&mut grad)
        .and(&predictions)
        .and(&targets)
        .for_each(|g, &p, &t| {
            let e = p - t;
            sum += e * e;
            *g = scale * e;
        });
    Ok((sum / n as f64, grad))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn examples() {
        let t = array![[0.0, 0.0, 0.0, 0.0, 0.0]];
        assert_eq!(mse_loss(t.view(), t.view()).unwrap().0, 0.0);
        let p = array![[1.0, 0.0, 0.0, 0.0, 0.0]];
        let (loss, grad) = mse_loss(p.view(), t.view()).unwrap();
        assert!((loss - 0.2).abs() < 1e-15);
        assert!((grad[[0, 0]] - 0.4).abs() < 1e-15);
    }

    #[test]
    fn shape_mismatch() {
        assert!(mse_loss(Array2::zeros((2, 5)).view(), Array2::zeros((2, 4)).view()).is_err());
    }
}
