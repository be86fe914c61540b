//! Online-sequential ELM and the NARX regressor window.
//!
//! [`OnlineState`] holds the least-squares solution `W` together with
//! `P = (I/lambda + sum H^T H)^{-1}`. Each [`OnlineState::update`] applies
//!
//! ```text
//! P' = P - P H^T (I + H P H^T)^{-1} H P
//! W' = W + P' H^T (Y - H W)
//! ```
//!
//! so that after any number of updates `W` equals the batch ridge solution
//! over every row seen so far.

use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector};

use crate::batch_trainer::{check_lambda, regularized_gram};
use crate::elm_model::OutputWeights;
use crate::error::{ensure_finite, Error, Result};

/// Relative asymmetry of `P` above which an update reports drift.
pub const SYMMETRY_TOLERANCE: f64 = 1e-6;

/// Sliding window that turns a sampled input/output stream into regression
/// pairs `x = [u(k-1), .., u(k-n_u), y(k-1), .., y(k-n_y)]`, target `y(k)`.
#[derive(Debug, Clone)]
pub struct NarxWindow {
    n_u: usize,
    n_y: usize,
    u_dim: usize,
    y_dim: usize,
    // newest first
    u_history: VecDeque<DVector<f64>>,
    y_history: VecDeque<DVector<f64>>,
}

impl NarxWindow {
    /// `n_u` may be zero for autonomous systems; `n_y` must be at least one.
    pub fn new(n_u: usize, n_y: usize, u_dim: usize, y_dim: usize) -> Result<Self> {
        if n_y == 0 || y_dim == 0 {
            return Err(Error::invalid("NARX window needs n_y >= 1 and y_dim >= 1"));
        }
        if n_u > 0 && u_dim == 0 {
            return Err(Error::invalid("n_u > 0 requires u_dim >= 1"));
        }
        Ok(Self {
            n_u,
            n_y,
            u_dim,
            y_dim,
            u_history: VecDeque::with_capacity(n_u + 1),
            y_history: VecDeque::with_capacity(n_y + 1),
        })
    }

    pub fn feature_len(&self) -> usize {
        self.u_dim * self.n_u + self.y_dim * self.n_y
    }

    pub fn is_full(&self) -> bool {
        self.u_history.len() == self.n_u && self.y_history.len() == self.n_y
    }

    /// Records sample `k` and returns the pair ending at `k` once both
    /// histories are full.
    pub fn push(
        &mut self,
        u_k: &DVector<f64>,
        y_k: &DVector<f64>,
    ) -> Result<Option<(DVector<f64>, DVector<f64>)>> {
        let u_len = if self.n_u == 0 { u_k.len() } else { self.u_dim };
        if u_k.len() != u_len || y_k.len() != self.y_dim {
            return Err(Error::invalid(format!(
                "NARX sample dimensions ({}, {}) do not match window ({}, {})",
                u_k.len(),
                y_k.len(),
                self.u_dim,
                self.y_dim
            )));
        }
        let pair = if self.is_full() {
            let mut x = Vec::with_capacity(self.feature_len());
            for u in &self.u_history {
                x.extend(u.iter());
            }
            for y in &self.y_history {
                x.extend(y.iter());
            }
            Some((DVector::from_vec(x), y_k.clone()))
        } else {
            None
        };
        if self.n_u > 0 {
            self.u_history.push_front(u_k.clone());
            self.u_history.truncate(self.n_u);
        }
        self.y_history.push_front(y_k.clone());
        self.y_history.truncate(self.n_y);
        Ok(pair)
    }
}

/// Recursive least-squares state of the output layer.
#[derive(Debug, Clone, PartialEq)]
pub struct OnlineState {
    w: OutputWeights,
    p: DMatrix<f64>,
}

impl OnlineState {
    /// Initializes from a seed batch: `K0 = I/lambda + H0^T H0`, `P0 = K0^{-1}`,
    /// `W0 = P0 H0^T Y0`.
    pub fn init(h0: &DMatrix<f64>, y0: &DMatrix<f64>, lambda: f64) -> Result<Self> {
        check_lambda(lambda)?;
        if h0.nrows() == 0 || h0.nrows() != y0.nrows() {
            return Err(Error::invalid(format!(
                "initial batch needs matching, non-zero row counts (H0 {}, Y0 {})",
                h0.nrows(),
                y0.nrows()
            )));
        }
        if h0.ncols() == 0 || y0.ncols() == 0 {
            return Err(Error::invalid("initial batch needs at least one column"));
        }
        ensure_finite("H0", h0.as_slice())?;
        ensure_finite("Y0", y0.as_slice())?;
        let n = h0.ncols();
        let chol = regularized_gram(h0, lambda).cholesky().ok_or_else(|| {
            Error::Numeric("initial normal matrix is not positive definite".into())
        })?;
        let mut p = chol.solve(&DMatrix::identity(n, n));
        symmetrize(&mut p);
        let w = &p * h0.tr_mul(y0);
        Ok(Self {
            w: OutputWeights::new(w)?,
            p,
        })
    }

    pub fn weights(&self) -> &OutputWeights {
        &self.w
    }

    pub fn p(&self) -> &DMatrix<f64> {
        &self.p
    }

    pub fn hidden_dim(&self) -> usize {
        self.p.nrows()
    }

    pub fn output_dim(&self) -> usize {
        self.w.output_dim()
    }

    /// Absorbs `k >= 1` new rows.
    pub fn update(&mut self, h1: &DMatrix<f64>, y1: &DMatrix<f64>) -> Result<()> {
        if h1.nrows() == 0 || h1.nrows() != y1.nrows() {
            return Err(Error::invalid(format!(
                "update needs matching, non-zero row counts (H {}, Y {})",
                h1.nrows(),
                y1.nrows()
            )));
        }
        if h1.ncols() != self.hidden_dim() || y1.ncols() != self.output_dim() {
            return Err(Error::invalid(format!(
                "update shapes H {}x{}, Y {}x{} do not match state ({} hidden, {} outputs)",
                h1.nrows(),
                h1.ncols(),
                y1.nrows(),
                y1.ncols(),
                self.hidden_dim(),
                self.output_dim()
            )));
        }
        ensure_finite("H", h1.as_slice())?;
        ensure_finite("Y", y1.as_slice())?;

        let k = h1.nrows();
        let gain = &self.p * h1.transpose(); // P H^T
        let mut s = h1 * &gain;
        for i in 0..k {
            s[(i, i)] += 1.0;
        }
        let chol = s.cholesky().ok_or_else(|| {
            Error::Numeric("innovation covariance is not positive definite".into())
        })?;
        let correction = &gain * chol.solve(&gain.transpose());
        let mut p = &self.p - correction;

        let asymmetry = relative_asymmetry(&p);
        symmetrize(&mut p);

        let innovation = y1 - h1 * self.w.as_matrix();
        let w = self.w.as_matrix() + &p * h1.tr_mul(&innovation);
        ensure_finite("updated P", p.as_slice())
            .map_err(|_| Error::Numeric("updated P is not finite".into()))?;
        self.w = OutputWeights::new(w)
            .map_err(|_| Error::Numeric("updated weights are not finite".into()))?;
        self.p = p;

        if asymmetry > SYMMETRY_TOLERANCE {
            return Err(Error::NumericDrift {
                asymmetry,
                tolerance: SYMMETRY_TOLERANCE,
            });
        }
        Ok(())
    }

    /// Single-sample convenience wrapper around [`OnlineState::update`].
    pub fn update_one(&mut self, phi: &DVector<f64>, target: &DVector<f64>) -> Result<()> {
        self.update(
            &DMatrix::from_row_slice(1, phi.len(), phi.as_slice()),
            &DMatrix::from_row_slice(1, target.len(), target.as_slice()),
        )
    }
}

/// Seed-batch initialization; see [`OnlineState::init`].
pub fn init_online(h0: &DMatrix<f64>, y0: &DMatrix<f64>, lambda: f64) -> Result<OnlineState> {
    OnlineState::init(h0, y0, lambda)
}

/// Value-returning form of [`OnlineState::update`].
pub fn online_update(
    state: &OnlineState,
    h1: &DMatrix<f64>,
    y1: &DMatrix<f64>,
) -> Result<OnlineState> {
    let mut next = state.clone();
    next.update(h1, y1)?;
    Ok(next)
}

fn relative_asymmetry(p: &DMatrix<f64>) -> f64 {
    let scale = p.amax();
    if scale == 0.0 {
        return 0.0;
    }
    (p - p.transpose()).amax() / scale
}

fn symmetrize(p: &mut DMatrix<f64>) {
    let n = p.nrows();
    for i in 0..n {
        for j in i + 1..n {
            let m = 0.5 * (p[(i, j)] + p[(j, i)]);
            p[(i, j)] = m;
            p[(j, i)] = m;
        }
    }
}
