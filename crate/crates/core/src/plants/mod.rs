//! Benchmark plants and the shared ODE integrator.
//!
//! Plants are expressed in physical units; the estimators work on normalized
//! values, using each plant's recommended [`NormalizationBounds`].

mod integrator;

use nalgebra::DVector;

pub use integrator::{euler, rk4, OdeState};

use crate::elm_model::{NormalizationBounds, OutputWeights, RandomProjection};
use crate::error::{Error, Result};

/// Continuous-time plant `dz/dt = f(z, u, t)`.
pub trait Plant: Send + Sync {
    fn name(&self) -> &'static str;
    fn state_dim(&self) -> usize;
    /// Zero for autonomous systems.
    fn input_dim(&self) -> usize;
    fn derivative(&self, z: &DVector<f64>, u: &DVector<f64>, t: f64) -> DVector<f64>;
    fn state_bounds(&self) -> NormalizationBounds;
    /// Physical range of the excitation input, `None` for autonomous plants.
    fn input_bounds(&self) -> Option<NormalizationBounds>;
}

/// One RK4 step of a plant with the input held constant over the step.
pub fn rk4_step(
    plant: &dyn Plant,
    z: &DVector<f64>,
    u: &DVector<f64>,
    t: f64,
    dt: f64,
) -> Result<DVector<f64>> {
    if !(dt > 0.0) {
        return Err(Error::invalid(format!(
            "step size must be positive, got {dt}"
        )));
    }
    let next = rk4(|t, z: &DVector<f64>| plant.derivative(z, u, t), t, z, dt);
    if next.iter().any(|v| !v.is_finite()) {
        return Err(Error::Divergence {
            t: t + dt,
            norm: next.norm(),
        });
    }
    Ok(next)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DcMotorParams {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
    pub c5: f64,
}

impl Default for DcMotorParams {
    fn default() -> Self {
        Self {
            c1: 60.0,
            c2: 0.5,
            c3: 40.0,
            c4: 6.0,
            c5: 40000.0,
        }
    }
}

/// `dx/dt = f(x) + g(x) u` with `f = [-c1 x1 + c3, -c4 x2]`, `g = [-c2 x2, -c5 x1]`.
pub fn dc_motor_derivative(x: &[f64; 2], u: f64, p: &DcMotorParams) -> [f64; 2] {
    [
        -p.c1 * x[0] + p.c3 - p.c2 * x[1] * u,
        -p.c4 * x[1] - p.c5 * x[0] * u,
    ]
}

/// Nonlinear DC motor.
///
/// The open-loop equilibrium is `x1 = c3 / (c1 - c2 c5 u^2 / c4)`, which loses
/// stability once `c2 c5 u^2 > c1 c4`, i.e. `|u| > 0.134` with the default
/// constants. The default input range `[-0.1, 0.1]` keeps the plant inside
/// its stable region, where `x1` stays in about `[0, 1.5]` and `|x2| < 1500`.
#[derive(Debug, Clone, PartialEq)]
pub struct DcMotor {
    pub params: DcMotorParams,
    pub state_bounds: NormalizationBounds,
    pub input_bounds: NormalizationBounds,
}

impl DcMotor {
    pub fn new(params: DcMotorParams) -> Self {
        Self {
            params,
            state_bounds: NormalizationBounds::new(vec![0.0, -1500.0], vec![1.5, 1500.0])
                .expect("static bounds"),
            input_bounds: NormalizationBounds::new(vec![-0.1], vec![0.1]).expect("static bounds"),
        }
    }
}

impl Default for DcMotor {
    fn default() -> Self {
        Self::new(DcMotorParams::default())
    }
}

impl Plant for DcMotor {
    fn name(&self) -> &'static str {
        "dc_motor"
    }

    fn state_dim(&self) -> usize {
        2
    }

    fn input_dim(&self) -> usize {
        1
    }

    fn derivative(&self, z: &DVector<f64>, u: &DVector<f64>, _t: f64) -> DVector<f64> {
        let d = dc_motor_derivative(&[z[0], z[1]], u[0], &self.params);
        DVector::from_row_slice(&d)
    }

    fn state_bounds(&self) -> NormalizationBounds {
        self.state_bounds.clone()
    }

    fn input_bounds(&self) -> Option<NormalizationBounds> {
        Some(self.input_bounds.clone())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LorentzParams {
    pub sigma: f64,
    pub r: f64,
    pub b: f64,
}

impl LorentzParams {
    pub fn new(sigma: f64, r: f64, b: f64) -> Result<Self> {
        if !(sigma > 0.0 && r > 0.0 && b > 0.0) {
            return Err(Error::invalid(format!(
                "Lorentz parameters must be positive (sigma={sigma}, r={r}, b={b})"
            )));
        }
        Ok(Self { sigma, r, b })
    }
}

impl Default for LorentzParams {
    fn default() -> Self {
        Self {
            sigma: 10.0,
            r: 28.0,
            b: 8.0 / 3.0,
        }
    }
}

pub fn lorentz_derivative(s: &[f64; 3], p: &LorentzParams) -> [f64; 3] {
    [
        p.sigma * (s[1] - s[0]),
        p.r * s[0] - s[1] - s[0] * s[2],
        s[0] * s[1] - p.b * s[2],
    ]
}

/// Lorentz oscillator; autonomous, no excitation input.
#[derive(Debug, Clone, PartialEq)]
pub struct Lorentz {
    pub params: LorentzParams,
    pub state_bounds: NormalizationBounds,
}

impl Lorentz {
    pub fn new(params: LorentzParams) -> Self {
        Self {
            params,
            state_bounds: NormalizationBounds::new(vec![-25.0, -25.0, 0.0], vec![25.0, 25.0, 50.0])
                .expect("static bounds"),
        }
    }
}

impl Default for Lorentz {
    fn default() -> Self {
        Self::new(LorentzParams::default())
    }
}

impl Plant for Lorentz {
    fn name(&self) -> &'static str {
        "lorentz"
    }

    fn state_dim(&self) -> usize {
        3
    }

    fn input_dim(&self) -> usize {
        0
    }

    fn derivative(&self, z: &DVector<f64>, _u: &DVector<f64>, _t: f64) -> DVector<f64> {
        DVector::from_row_slice(&lorentz_derivative(&[z[0], z[1], z[2]], &self.params))
    }

    fn state_bounds(&self) -> NormalizationBounds {
        self.state_bounds.clone()
    }

    fn input_bounds(&self) -> Option<NormalizationBounds> {
        None
    }
}

/// Plant whose dynamics lie exactly in the model class:
/// `dz/dt = A z + W*^T phi([u, z]) + d(t)`.
///
/// Works directly in normalized coordinates. `d(t) = xi [cos(wt), sin(wt), 0, ..]`
/// is an optional bounded disturbance with `||d|| = xi`.
#[derive(Debug, Clone)]
pub struct SyntheticElmPlant {
    a: nalgebra::DMatrix<f64>,
    projection: RandomProjection,
    true_weights: OutputWeights,
    input_dim: usize,
    disturbance: Option<(f64, f64)>,
}

impl SyntheticElmPlant {
    pub fn new(
        a: nalgebra::DMatrix<f64>,
        projection: RandomProjection,
        true_weights: OutputWeights,
        input_dim: usize,
    ) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n || n == 0 {
            return Err(Error::invalid(
                "synthetic plant needs a square, non-empty A",
            ));
        }
        if projection.input_dim() != input_dim + n {
            return Err(Error::invalid(format!(
                "projection input_dim {} != input_dim {input_dim} + state_dim {n}",
                projection.input_dim()
            )));
        }
        if true_weights.hidden_dim() != projection.hidden_dim() || true_weights.output_dim() != n {
            return Err(Error::invalid("true weights do not match projection and A"));
        }
        Ok(Self {
            a,
            projection,
            true_weights,
            input_dim,
            disturbance: None,
        })
    }

    /// Adds `d(t)` of norm `xi` rotating at `omega` rad per time unit.
    pub fn with_disturbance(mut self, xi: f64, omega: f64) -> Self {
        self.disturbance = Some((xi, omega));
        self
    }

    pub fn true_weights(&self) -> &OutputWeights {
        &self.true_weights
    }

    pub fn projection(&self) -> &RandomProjection {
        &self.projection
    }

    /// Disturbance norm bound `xi` (zero without disturbance).
    pub fn xi(&self) -> f64 {
        self.disturbance.map_or(0.0, |(xi, _)| xi)
    }

    pub fn disturbance(&self, t: f64) -> DVector<f64> {
        let n = self.a.nrows();
        let mut d = DVector::zeros(n);
        if let Some((xi, omega)) = self.disturbance {
            d[0] = xi * (omega * t).cos();
            if n > 1 {
                d[1] = xi * (omega * t).sin();
            }
        }
        d
    }

    /// Model input `[u, z]` in the same order as the NARX features.
    pub fn model_input(u: &DVector<f64>, z: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(u.len() + z.len(), u.iter().chain(z.iter()).copied())
    }
}

impl Plant for SyntheticElmPlant {
    fn name(&self) -> &'static str {
        "synthetic_elm"
    }

    fn state_dim(&self) -> usize {
        self.a.nrows()
    }

    fn input_dim(&self) -> usize {
        self.input_dim
    }

    fn derivative(&self, z: &DVector<f64>, u: &DVector<f64>, t: f64) -> DVector<f64> {
        let phi = self
            .projection
            .hidden_output(&Self::model_input(u, z))
            .expect("dimensions checked at construction");
        &self.a * z + self.true_weights.as_matrix().tr_mul(&phi) + self.disturbance(t)
    }

    fn state_bounds(&self) -> NormalizationBounds {
        NormalizationBounds::unit(self.state_dim()).expect("non-empty")
    }

    fn input_bounds(&self) -> Option<NormalizationBounds> {
        (self.input_dim > 0).then(|| NormalizationBounds::unit(self.input_dim).expect("non-empty"))
    }
}
