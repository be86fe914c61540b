//! Continuous-time estimator with Lyapunov-derived weight adaptation.
//!
//! The plant is written as `dz/dt = A z + W*^T phi + eps` with a Hurwitz design
//! matrix `A`. The estimator runs
//!
//! ```text
//! dz_hat/dt = A z_hat + W_hat^T phi
//! dW_hat/dt = gamma * phi e^T,     e = z - z_hat
//! ```
//!
//! With `V = 1/2 e^T e + 1/(2 gamma) tr(W~^T W~)`, `W~ = W* - W_hat`, this gives
//! `dV/dt = e^T A e + e^T eps`, which is negative whenever
//! `||e|| > xi / |mu|`, where `xi` bounds `||eps||` and `mu` is the largest
//! eigenvalue of the symmetric part of `A`. `gamma = 1` is the plain law.
//!
//! Everything here is in normalized coordinates.

use nalgebra::{DMatrix, DVector};

use crate::elm_model::{OutputWeights, RandomProjection};
use crate::error::{ensure_finite, Error, Result};
use crate::plants::{euler, rk4};

/// Hurwitz design matrix `A`.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix(DMatrix<f64>);

impl DesignMatrix {
    pub fn new(a: DMatrix<f64>) -> Result<Self> {
        if a.nrows() == 0 || a.nrows() != a.ncols() {
            return Err(Error::invalid(format!(
                "design matrix must be square and non-empty, got {}x{}",
                a.nrows(),
                a.ncols()
            )));
        }
        ensure_finite("design matrix", a.as_slice())?;
        let eigenvalues = a.clone().complex_eigenvalues();
        if let Some(bad) = eigenvalues.iter().find(|l| !(l.re < 0.0)) {
            return Err(Error::invalid(format!(
                "design matrix is not Hurwitz: eigenvalue {}{:+}i has non-negative real part",
                bad.re, bad.im
            )));
        }
        Ok(Self(a))
    }

    pub fn diagonal(entries: &[f64]) -> Result<Self> {
        Self::new(DMatrix::from_diagonal(&DVector::from_row_slice(entries)))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    /// Largest eigenvalue of `(A + A^T) / 2`; negative-definite symmetric parts give `mu < 0`.
    pub fn symmetric_part_max_eigenvalue(&self) -> f64 {
        let sym = (&self.0 + self.0.transpose()) * 0.5;
        sym.symmetric_eigenvalues().max()
    }
}

/// Error radius `gamma = xi / |mu|` outside of which `V` strictly decreases.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityBound {
    pub xi: f64,
    pub gamma: f64,
}

pub fn stability_threshold(a: &DesignMatrix, xi: f64) -> Result<StabilityBound> {
    if !(xi >= 0.0) || !xi.is_finite() {
        return Err(Error::invalid(format!(
            "xi must be finite and >= 0, got {xi}"
        )));
    }
    let mu = a.symmetric_part_max_eigenvalue();
    // A Hurwitz matrix may still have an indefinite symmetric part; then no
    // finite radius exists.
    let gamma = if mu < 0.0 {
        xi / mu.abs()
    } else {
        f64::INFINITY
    };
    Ok(StabilityBound { xi, gamma })
}

/// `1/2 ||e||^2 + 1/2 ||W~||_F^2`.
pub fn lyapunov_value(e: &DVector<f64>, w_tilde: &DMatrix<f64>) -> f64 {
    0.5 * e.norm_squared() + 0.5 * w_tilde.norm_squared()
}

/// Lyapunov function matching an adaptation gain `gamma`:
/// `1/2 ||e||^2 + 1/(2 gamma) ||W~||_F^2`.
pub fn lyapunov_value_with_gain(e: &DVector<f64>, w_tilde: &DMatrix<f64>, gain: f64) -> f64 {
    0.5 * e.norm_squared() + 0.5 * w_tilde.norm_squared() / gain
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorState {
    pub z_hat: DVector<f64>,
    pub w_hat: DMatrix<f64>,
    pub t: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Integrator {
    #[default]
    Rk4,
    Euler,
}

/// Lyapunov-ELM estimator: design matrix, frozen projection and evolving state.
#[derive(Debug, Clone)]
pub struct LyapunovEstimator {
    a: DesignMatrix,
    projection: RandomProjection,
    gain: f64,
    dead_zone: Option<f64>,
    integrator: Integrator,
    state: EstimatorState,
}

impl LyapunovEstimator {
    pub fn new(
        a: DesignMatrix,
        projection: RandomProjection,
        w0: OutputWeights,
        z0: DVector<f64>,
    ) -> Result<Self> {
        let n = a.dim();
        if z0.len() != n {
            return Err(Error::invalid(format!(
                "initial state has length {}, A is {n}x{n}",
                z0.len()
            )));
        }
        if w0.hidden_dim() != projection.hidden_dim() || w0.output_dim() != n {
            return Err(Error::invalid(format!(
                "initial weights are {}x{}, expected {}x{n}",
                w0.hidden_dim(),
                w0.output_dim(),
                projection.hidden_dim()
            )));
        }
        ensure_finite("initial state", z0.as_slice())?;
        Ok(Self {
            a,
            projection,
            gain: 1.0,
            dead_zone: None,
            integrator: Integrator::Rk4,
            state: EstimatorState {
                z_hat: z0,
                w_hat: w0.into_matrix(),
                t: 0.0,
            },
        })
    }

    /// Scalar adaptation gain (default 1).
    pub fn with_gain(mut self, gain: f64) -> Result<Self> {
        if !(gain >= 0.0) || !gain.is_finite() {
            return Err(Error::invalid(format!(
                "adaptation gain must be finite and >= 0, got {gain}"
            )));
        }
        self.gain = gain;
        Ok(self)
    }

    /// Freeze adaptation while `||e|| <= radius`.
    pub fn with_dead_zone(mut self, radius: f64) -> Result<Self> {
        if !(radius >= 0.0) {
            return Err(Error::invalid(format!(
                "dead-zone radius must be >= 0, got {radius}"
            )));
        }
        self.dead_zone = Some(radius);
        Ok(self)
    }

    pub fn with_integrator(mut self, integrator: Integrator) -> Self {
        self.integrator = integrator;
        self
    }

    pub fn state(&self) -> &EstimatorState {
        &self.state
    }

    pub fn design_matrix(&self) -> &DesignMatrix {
        &self.a
    }

    pub fn projection(&self) -> &RandomProjection {
        &self.projection
    }

    pub fn gain(&self) -> f64 {
        self.gain
    }

    /// Right-hand side `(dz_hat, dW_hat)` at an arbitrary point, for callers
    /// that integrate the estimator jointly with a plant.
    pub fn vector_field(
        &self,
        z_hat: &DVector<f64>,
        w_hat: &DMatrix<f64>,
        z_meas: &DVector<f64>,
        phi: &DVector<f64>,
    ) -> (DVector<f64>, DMatrix<f64>) {
        let dz = self.a.as_matrix() * z_hat + w_hat.tr_mul(phi);
        let e = z_meas - z_hat;
        let frozen = self.dead_zone.is_some_and(|r| e.norm() <= r);
        let dw = if frozen || self.gain == 0.0 {
            DMatrix::zeros(w_hat.nrows(), w_hat.ncols())
        } else {
            phi * e.transpose() * self.gain
        };
        (dz, dw)
    }

    fn check_inputs(&self, z_meas: &DVector<f64>, phi: &DVector<f64>) -> Result<()> {
        if z_meas.len() != self.a.dim() {
            return Err(Error::invalid(format!(
                "measurement has length {}, state dimension is {}",
                z_meas.len(),
                self.a.dim()
            )));
        }
        if phi.len() != self.projection.hidden_dim() {
            return Err(Error::invalid(format!(
                "hidden output has length {}, expected {}",
                phi.len(),
                self.projection.hidden_dim()
            )));
        }
        ensure_finite("measurement", z_meas.as_slice())?;
        ensure_finite("hidden output", phi.as_slice())
    }

    /// `(A z_hat + W_hat^T phi, gamma phi e^T)` at the current state.
    pub fn derivatives(
        &self,
        z_meas: &DVector<f64>,
        phi: &DVector<f64>,
    ) -> Result<(DVector<f64>, DMatrix<f64>)> {
        self.check_inputs(z_meas, phi)?;
        Ok(self.vector_field(&self.state.z_hat, &self.state.w_hat, z_meas, phi))
    }

    /// Advances one step of length `dt`, holding `z_meas` and
    /// `phi(model_input)` constant across the step.
    pub fn step(
        &mut self,
        z_meas: &DVector<f64>,
        model_input: &DVector<f64>,
        dt: f64,
    ) -> Result<()> {
        let phi = self.projection.hidden_output(model_input)?;
        self.step_with_phi(z_meas, &phi, dt)
    }

    pub fn step_with_phi(
        &mut self,
        z_meas: &DVector<f64>,
        phi: &DVector<f64>,
        dt: f64,
    ) -> Result<()> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::invalid(format!(
                "step size must be positive, got {dt}"
            )));
        }
        self.check_inputs(z_meas, phi)?;
        let x0 = (self.state.z_hat.clone(), self.state.w_hat.clone());
        let f =
            |_t: f64, s: &(DVector<f64>, DMatrix<f64>)| self.vector_field(&s.0, &s.1, z_meas, phi);
        let (z_hat, w_hat) = match self.integrator {
            Integrator::Rk4 => rk4(f, self.state.t, &x0, dt),
            Integrator::Euler => euler(f, self.state.t, &x0, dt),
        };
        let t = self.state.t + dt;
        if z_hat.iter().chain(w_hat.iter()).any(|v| !v.is_finite()) {
            return Err(Error::Divergence {
                t,
                norm: z_hat.norm(),
            });
        }
        self.state = EstimatorState { z_hat, w_hat, t };
        Ok(())
    }
}

/// Advances `dz/dt = A z + W^T phi` with fixed weights over one step.
pub fn propagate_fixed_weights(
    a: &DesignMatrix,
    w: &DMatrix<f64>,
    z: &DVector<f64>,
    phi: &DVector<f64>,
    t: f64,
    dt: f64,
) -> Result<DVector<f64>> {
    let forcing = w.tr_mul(phi);
    let next = rk4(
        |_t, z: &DVector<f64>| a.as_matrix() * z + &forcing,
        t,
        z,
        dt,
    );
    if next.iter().any(|v| !v.is_finite()) {
        return Err(Error::Divergence {
            t: t + dt,
            norm: next.norm(),
        });
    }
    Ok(next)
}
