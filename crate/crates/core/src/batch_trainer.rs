//! Offline ridge solution of the output layer.
//!
//! The solver returns `W = (I/lambda + H^T H)^{-1} H^T Y`. Note the placement
//! of `lambda`: this is the minimizer of `||HW - Y||^2 + (1/lambda) ||W||^2`,
//! so a *large* `lambda` means *weak* regularization. The recursive update in
//! [`crate::os_elm`] starts from the same normal matrix.

use nalgebra::{DMatrix, DVector};

use crate::elm_model::{OutputWeights, RandomProjection};
use crate::error::{ensure_finite, Error, Result};

/// Default regularization coefficient (near-negligible regularization).
pub const DEFAULT_LAMBDA: f64 = 1e6;

/// Hidden-layer output matrix `H` (`N x hidden_dim`) with its targets `Y` (`N x output_dim`).
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrices {
    h: DMatrix<f64>,
    y: DMatrix<f64>,
}

impl DesignMatrices {
    pub fn new(h: DMatrix<f64>, y: DMatrix<f64>) -> Result<Self> {
        if h.nrows() == 0 {
            return Err(Error::invalid("design matrices need at least one row"));
        }
        if h.nrows() != y.nrows() {
            return Err(Error::invalid(format!(
                "H has {} rows but Y has {}",
                h.nrows(),
                y.nrows()
            )));
        }
        if h.ncols() == 0 || y.ncols() == 0 {
            return Err(Error::invalid("design matrices need at least one column"));
        }
        ensure_finite("H", h.as_slice())?;
        ensure_finite("Y", y.as_slice())?;
        Ok(Self { h, y })
    }

    pub fn h(&self) -> &DMatrix<f64> {
        &self.h
    }

    pub fn y(&self) -> &DMatrix<f64> {
        &self.y
    }
}

/// Stacks `hidden_output` of every row of `x` (`N x input_dim`).
pub fn build_hidden_matrix(proj: &RandomProjection, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if x.ncols() != proj.input_dim() {
        return Err(Error::invalid(format!(
            "sample matrix has {} columns, projection expects {}",
            x.ncols(),
            proj.input_dim()
        )));
    }
    let mut h = DMatrix::zeros(x.nrows(), proj.hidden_dim());
    for k in 0..x.nrows() {
        let row: DVector<f64> = x.row(k).transpose();
        let phi = proj.hidden_output(&row)?;
        h.set_row(k, &phi.transpose());
    }
    Ok(h)
}

/// `I/lambda + H^T H`.
pub(crate) fn regularized_gram(h: &DMatrix<f64>, lambda: f64) -> DMatrix<f64> {
    let n = h.ncols();
    let mut k = h.tr_mul(h);
    for i in 0..n {
        k[(i, i)] += 1.0 / lambda;
    }
    k
}

pub(crate) fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::invalid(format!(
            "regularization lambda must be positive and finite, got {lambda}"
        )));
    }
    Ok(())
}

/// Solves `(I/lambda + H^T H) W = H^T Y` by Cholesky factorization.
pub fn ridge_solve(d: &DesignMatrices, lambda: f64) -> Result<OutputWeights> {
    check_lambda(lambda)?;
    let gram = regularized_gram(&d.h, lambda);
    let chol = gram.cholesky().ok_or_else(|| {
        Error::Numeric("regularized normal matrix is not positive definite".into())
    })?;
    let rhs = d.h.tr_mul(&d.y);
    let w = chol.solve(&rhs);
    OutputWeights::new(w).map_err(|_| Error::Numeric("ridge solution is not finite".into()))
}

/// `||HW - Y||^2 + (1/lambda) ||W||_F^2`, the objective minimized by [`ridge_solve`].
pub fn ridge_objective(d: &DesignMatrices, w: &DMatrix<f64>, lambda: f64) -> f64 {
    (&d.h * w - &d.y).norm_squared() + w.norm_squared() / lambda
}
