//! Online identification of nonlinear dynamic systems with random-projection
//! (extreme learning machine) models.
//!
//! Two estimators share one frozen [`elm_model::RandomProjection`]:
//!
//! * [`lyapunov_estimator`]: continuous-time state estimator whose output
//!   weights follow the Lyapunov-derived law `dW/dt = gamma phi e^T`;
//! * [`os_elm`]: online-sequential ELM, a recursive least-squares update of
//!   the same output weights.
//!
//! [`harness`] runs both on the DC-motor and Lorentz benchmarks and reports
//! normalized RMSE.

// NaN must fail validation, so `!(x > 0.0)` is intended throughout;
// indexed loops mirror the matrix notation.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod batch_trainer;
pub mod elm_model;
pub mod error;
pub mod harness;
pub mod lyapunov_estimator;
pub mod os_elm;
pub mod plants;
pub mod rng;
pub mod signals;

pub use error::{Error, Result};
