//! Random-projection model: `y = g(W_r x + b_r)^T W`.
//!
//! The input layer (`W_r`, `b_r`) is drawn once and frozen; only the output
//! weights `W` are ever estimated. All three training modes in this crate
//! (batch ridge, OS-ELM recursion and Lyapunov adaptation) share the same
//! [`RandomProjection`] so their hidden-layer outputs are identical.

use nalgebra::{DMatrix, DVector};

use crate::error::{ensure_finite, Error, Result};
use crate::rng::DetRng;

/// Hidden-layer nonlinearity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Activation {
    #[default]
    Sigmoid,
}

impl Activation {
    pub fn apply(self, v: f64) -> f64 {
        match self {
            Activation::Sigmoid => sigmoid(v),
        }
    }
}

/// Logistic function, evaluated without overflowing `exp` for large `|v|`.
pub fn sigmoid(v: f64) -> f64 {
    if v >= 0.0 {
        1.0 / (1.0 + (-v).exp())
    } else {
        let e = v.exp();
        e / (1.0 + e)
    }
}

/// Frozen input layer of the model.
///
/// `weights` is `hidden_dim x input_dim`; row `j` holds the input weights of
/// hidden neuron `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomProjection {
    weights: DMatrix<f64>,
    biases: DVector<f64>,
    activation: Activation,
    seed: u64,
}

impl RandomProjection {
    /// Draws weights and biases i.i.d. uniform on `[-1, 1]` from [`DetRng`].
    ///
    /// Draw order: weights row by row (neuron-major), then biases.
    pub fn new(input_dim: usize, hidden_dim: usize, seed: u64) -> Result<Self> {
        if input_dim == 0 || hidden_dim == 0 {
            return Err(Error::invalid(format!(
                "projection dimensions must be positive (input_dim={input_dim}, hidden_dim={hidden_dim})"
            )));
        }
        if input_dim.checked_mul(hidden_dim).is_none() {
            return Err(Error::invalid("projection dimensions overflow"));
        }
        let mut rng = DetRng::new(seed);
        let mut weights = DMatrix::zeros(hidden_dim, input_dim);
        for j in 0..hidden_dim {
            for i in 0..input_dim {
                weights[(j, i)] = rng.uniform(-1.0, 1.0);
            }
        }
        let biases = DVector::from_fn(hidden_dim, |_, _| rng.uniform(-1.0, 1.0));
        Ok(Self {
            weights,
            biases,
            activation: Activation::Sigmoid,
            seed,
        })
    }

    /// Builds a projection from explicit parameters (seed recorded as 0).
    pub fn from_parts(
        weights: DMatrix<f64>,
        biases: DVector<f64>,
        activation: Activation,
    ) -> Result<Self> {
        if weights.nrows() == 0 || weights.ncols() == 0 {
            return Err(Error::invalid("projection weights must be non-empty"));
        }
        if biases.len() != weights.nrows() {
            return Err(Error::invalid(format!(
                "bias length {} does not match hidden_dim {}",
                biases.len(),
                weights.nrows()
            )));
        }
        ensure_finite("projection weights", weights.as_slice())?;
        ensure_finite("projection biases", biases.as_slice())?;
        Ok(Self {
            weights,
            biases,
            activation,
            seed: 0,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.weights.ncols()
    }

    pub fn hidden_dim(&self) -> usize {
        self.weights.nrows()
    }

    pub fn weights(&self) -> &DMatrix<f64> {
        &self.weights
    }

    pub fn biases(&self) -> &DVector<f64> {
        &self.biases
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// `phi = g(W_r x + b_r)`.
    pub fn hidden_output(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        if x.len() != self.input_dim() {
            return Err(Error::invalid(format!(
                "input length {} does not match projection input_dim {}",
                x.len(),
                self.input_dim()
            )));
        }
        let mut phi = &self.weights * x + &self.biases;
        phi.apply(|v| *v = self.activation.apply(*v));
        Ok(phi)
    }
}

/// Trained output layer, `hidden_dim x output_dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct OutputWeights(DMatrix<f64>);

impl OutputWeights {
    pub fn new(values: DMatrix<f64>) -> Result<Self> {
        ensure_finite("output weights", values.as_slice())?;
        Ok(Self(values))
    }

    pub fn zeros(hidden_dim: usize, output_dim: usize) -> Self {
        Self(DMatrix::zeros(hidden_dim, output_dim))
    }

    pub fn hidden_dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn output_dim(&self) -> usize {
        self.0.ncols()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }
}

/// `y = phi^T W` for the hidden output of `x`.
pub fn predict(
    proj: &RandomProjection,
    w: &OutputWeights,
    x: &DVector<f64>,
) -> Result<DVector<f64>> {
    if w.hidden_dim() != proj.hidden_dim() {
        return Err(Error::invalid(format!(
            "output weights have {} rows, projection has {} hidden neurons",
            w.hidden_dim(),
            proj.hidden_dim()
        )));
    }
    let phi = proj.hidden_output(x)?;
    Ok(w.as_matrix().tr_mul(&phi))
}

/// Per-dimension range used to map physical values onto `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizationBounds {
    lower: DVector<f64>,
    upper: DVector<f64>,
}

impl NormalizationBounds {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.is_empty() || lower.len() != upper.len() {
            return Err(Error::invalid(format!(
                "bounds need equal, non-zero lengths (lower {}, upper {})",
                lower.len(),
                upper.len()
            )));
        }
        for (i, (lo, hi)) in lower.iter().zip(&upper).enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::invalid(format!(
                    "degenerate bounds in dimension {i}: [{lo}, {hi}]"
                )));
            }
        }
        Ok(Self {
            lower: DVector::from_vec(lower),
            upper: DVector::from_vec(upper),
        })
    }

    /// `[-1, 1]` in every dimension; normalization is the identity.
    pub fn unit(dim: usize) -> Result<Self> {
        Self::new(vec![-1.0; dim], vec![1.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &DVector<f64> {
        &self.lower
    }

    pub fn upper(&self) -> &DVector<f64> {
        &self.upper
    }

    fn check_dim(&self, len: usize) -> Result<()> {
        if len != self.dim() {
            return Err(Error::invalid(format!(
                "vector length {len} does not match bounds dimension {}",
                self.dim()
            )));
        }
        Ok(())
    }

    pub fn normalize(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_dim(x.len())?;
        Ok(DVector::from_fn(x.len(), |i, _| {
            let (lo, hi) = (self.lower[i], self.upper[i]);
            2.0 * (x[i] - lo) / (hi - lo) - 1.0
        }))
    }

    pub fn denormalize(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_dim(x.len())?;
        Ok(DVector::from_fn(x.len(), |i, _| {
            let (lo, hi) = (self.lower[i], self.upper[i]);
            lo + (x[i] + 1.0) * (hi - lo) / 2.0
        }))
    }

    /// Scale factor `2 / (upper - lower)` of each dimension.
    pub fn scale(&self) -> DVector<f64> {
        (&self.upper - &self.lower).map(|w| 2.0 / w)
    }
}
