use nalgebra::DMatrix;

use crate::elm_model::NormalizationBounds;
use crate::error::{Error, Result};

/// RMSE of each state dimension after mapping both series onto `[-1, 1]`,
/// averaged over dimensions. Rows are time samples.
pub fn normalized_rmse(
    truth: &DMatrix<f64>,
    estimate: &DMatrix<f64>,
    bounds: &NormalizationBounds,
) -> Result<f64> {
    if truth.shape() != estimate.shape() {
        return Err(Error::invalid(format!(
            "series shapes differ: {:?} vs {:?}",
            truth.shape(),
            estimate.shape()
        )));
    }
    if truth.nrows() == 0 {
        return Err(Error::invalid("RMSE needs at least one sample"));
    }
    if truth.ncols() != bounds.dim() {
        return Err(Error::invalid(format!(
            "series have {} columns, bounds have {} dimensions",
            truth.ncols(),
            bounds.dim()
        )));
    }
    let scale = bounds.scale();
    let n = truth.nrows() as f64;
    let per_dim = (0..truth.ncols()).map(|j| {
        let sq: f64 = truth
            .column(j)
            .iter()
            .zip(estimate.column(j).iter())
            .map(|(a, b)| ((a - b) * scale[j]).powi(2))
            .sum();
        (sq / n).sqrt()
    });
    Ok(per_dim.sum::<f64>() / truth.ncols() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DVector;
    use proptest::prelude::*;

    #[test]
    fn identical_series() {
        let b = NormalizationBounds::new(vec![0.0], vec![4.0]).unwrap();
        let s = DMatrix::from_fn(10, 1, |i, _| i as f64 * 0.3);
        assert_eq!(normalized_rmse(&s, &s, &b).unwrap(), 0.0);
    }

    #[test]
    fn constant_offset() {
        let b = NormalizationBounds::unit(1).unwrap();
        let s = DMatrix::from_fn(10, 1, |i, _| (i as f64 * 0.7).sin());
        let e = s.add_scalar(0.1);
        assert!((normalized_rmse(&s, &e, &b).unwrap() - 0.1).abs() < 1e-15);
        // same offset in physical units of a wider range
        let wide = NormalizationBounds::new(vec![-10.0], vec![10.0]).unwrap();
        assert!((normalized_rmse(&s, &s.add_scalar(1.0), &wide).unwrap() - 0.1).abs() < 1e-15);
    }

    #[test]
    fn averages_dimensions() {
        let b = NormalizationBounds::unit(2).unwrap();
        let s = DMatrix::zeros(4, 2);
        let mut e = DMatrix::zeros(4, 2);
        e.column_mut(0).fill(0.3);
        e.column_mut(1).fill(-0.1);
        assert!((normalized_rmse(&s, &e, &b).unwrap() - 0.2).abs() < 1e-15);
    }

    #[test]
    fn mismatched_lengths() {
        let b = NormalizationBounds::unit(1).unwrap();
        assert!(normalized_rmse(&DMatrix::zeros(3, 1), &DMatrix::zeros(4, 1), &b).is_err());
        assert!(normalized_rmse(&DMatrix::zeros(0, 1), &DMatrix::zeros(0, 1), &b).is_err());
        assert!(normalized_rmse(&DMatrix::zeros(3, 2), &DMatrix::zeros(3, 2), &b).is_err());
    }

    proptest! {
        #[test]
        fn invariant_under_normalization_round_trip(
            values in proptest::collection::vec((-3.0f64..3.0, -3.0f64..3.0), 1..40),
            lo in -5.0f64..0.0,
            width in 0.5f64..10.0,
        ) {
            let b = NormalizationBounds::new(vec![lo, lo], vec![lo + width, lo + width * 2.0]).unwrap();
            let truth = DMatrix::from_fn(values.len(), 2, |i, j| if j == 0 { values[i].0 } else { values[i].1 });
            let est = truth.map(|v| v * 0.9 + 0.05);
            let round = |m: &DMatrix<f64>| {
                let mut out = m.clone();
                for r in 0..m.nrows() {
                    let row: DVector<f64> = m.row(r).transpose();
                    let back = b.denormalize(&b.normalize(&row).unwrap()).unwrap();
                    out.set_row(r, &back.transpose());
                }
                out
            };
            let direct = normalized_rmse(&truth, &est, &b).unwrap();
            let tripped = normalized_rmse(&round(&truth), &round(&est), &b).unwrap();
            prop_assert!(direct >= 0.0);
            prop_assert!((direct - tripped).abs() <= 1e-12 * direct.max(1.0));
        }
    }
}
