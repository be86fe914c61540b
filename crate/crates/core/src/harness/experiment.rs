use nalgebra::{DMatrix, DVector};

use super::config::{ExperimentConfig, Method, OnlineTarget, PlantKind};
use super::metrics::normalized_rmse;
use crate::elm_model::{NormalizationBounds, OutputWeights, RandomProjection};
use crate::error::{Error, Result};
use crate::lyapunov_estimator::{
    propagate_fixed_weights, stability_threshold, DesignMatrix, LyapunovEstimator,
};
use crate::os_elm::{NarxWindow, OnlineState};
use crate::plants::{rk4_step, DcMotor, Lorentz, Plant, SyntheticElmPlant};
use crate::rng::DetRng;
use crate::signals::{add_noise, prms_generate, NoiseConfig};

// Sub-stream tags of the experiment seed.
const STREAM_PROJECTION: u64 = 1;
const STREAM_EXCITATION: u64 = 2;
const STREAM_NOISE: u64 = 3;
const STREAM_TRUE_WEIGHTS: u64 = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct RunMetadata {
    pub seed: u64,
    pub projection_seed: u64,
    pub excitation_seed: u64,
    pub noise_seed: u64,
    pub config_hash: String,
}

/// Subsampled snapshots of the output weights, flattened column-major.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct WeightLog {
    pub times: Vec<f64>,
    pub values: Vec<Vec<f64>>,
    pub hidden_dim: usize,
    pub output_dim: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MethodResult {
    pub method: Method,
    /// Physical-unit state estimates, one row per time sample. Rows after a
    /// divergence are NaN.
    pub estimates: DMatrix<f64>,
    pub weights: WeightLog,
    /// `None` when the method diverged.
    pub rmse: Option<f64>,
    /// `(t, ||z_hat||)` at divergence.
    pub diverged: Option<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    pub times: Vec<f64>,
    /// Physical-unit true states, one row per time sample.
    pub truth: DMatrix<f64>,
    pub methods: Vec<MethodResult>,
    pub metadata: RunMetadata,
}

impl ExperimentResult {
    pub fn method(&self, m: Method) -> Option<&MethodResult> {
        self.methods.iter().find(|r| r.method == m)
    }

    pub fn rmse(&self, m: Method) -> Option<f64> {
        self.method(m).and_then(|r| r.rmse)
    }

    pub fn diverged(&self) -> bool {
        self.methods.iter().any(|r| r.diverged.is_some())
    }

    pub fn state_dim(&self) -> usize {
        self.truth.ncols()
    }
}

/// Everything both estimators see, in normalized units.
struct Stream {
    /// Normalized inputs, `N x m` (m may be 0).
    inputs: DMatrix<f64>,
    /// Normalized (possibly noisy) state measurements, `N x n`.
    measurements: DMatrix<f64>,
    /// Hidden outputs `phi([u(k), z_meas(k)])`, `N x hidden_dim`.
    phi: DMatrix<f64>,
}

impl Stream {
    fn model_input(&self, k: usize) -> DVector<f64> {
        let m = self.inputs.ncols();
        let n = self.measurements.ncols();
        DVector::from_fn(m + n, |i, _| {
            if i < m {
                self.inputs[(k, i)]
            } else {
                self.measurements[(k, i - m)]
            }
        })
    }

    fn measurement(&self, k: usize) -> DVector<f64> {
        self.measurements.row(k).transpose()
    }

    fn phi(&self, k: usize) -> DVector<f64> {
        self.phi.row(k).transpose()
    }
}

fn sub_seed(seed: u64, stream: u64) -> u64 {
    DetRng::stream(seed, stream).next_u64()
}

fn build_plant(
    c: &ExperimentConfig,
    projection: &RandomProjection,
    a: &DesignMatrix,
) -> Result<Box<dyn Plant>> {
    Ok(match c.plant {
        PlantKind::DcMotor => {
            let mut p = DcMotor::new(c.dc_motor_params());
            p.state_bounds = c.state_bounds()?;
            if let Some(ib) = c.input_bounds()? {
                p.input_bounds = ib;
            }
            Box::new(p)
        }
        PlantKind::Lorentz => {
            let mut p = Lorentz::new(c.lorentz_params()?);
            p.state_bounds = c.state_bounds()?;
            Box::new(p)
        }
        PlantKind::SyntheticElm => {
            let mut rng = DetRng::new(sub_seed(c.seed, STREAM_TRUE_WEIGHTS));
            let scale = c.synthetic_weight_scale;
            let w = DMatrix::from_fn(projection.hidden_dim(), c.state_dim(), |_, _| {
                rng.uniform(-scale, scale)
            });
            let plant = SyntheticElmPlant::new(
                a.as_matrix().clone(),
                projection.clone(),
                OutputWeights::new(w)?,
                c.input_dim(),
            )?;
            Box::new(if c.disturbance_xi > 0.0 {
                plant.with_disturbance(c.disturbance_xi, c.disturbance_omega)
            } else {
                plant
            })
        }
    })
}

fn normalize_rows(m: &DMatrix<f64>, b: &NormalizationBounds) -> Result<DMatrix<f64>> {
    let mut out = m.clone();
    for r in 0..m.nrows() {
        out.set_row(r, &b.normalize(&m.row(r).transpose())?.transpose());
    }
    Ok(out)
}

fn denormalize_row(v: &DVector<f64>, b: &NormalizationBounds) -> DVector<f64> {
    b.denormalize(v).expect("dimension fixed by config")
}

struct WeightLogger {
    stride: usize,
    log: WeightLog,
}

impl WeightLogger {
    fn new(steps: usize, max_points: usize, hidden_dim: usize, output_dim: usize) -> Self {
        Self {
            stride: steps.div_ceil(max_points).max(1),
            log: WeightLog {
                hidden_dim,
                output_dim,
                ..WeightLog::default()
            },
        }
    }

    fn record(&mut self, k: usize, t: f64, w: &DMatrix<f64>) {
        if k.is_multiple_of(self.stride) {
            self.log.times.push(t);
            self.log.values.push(w.as_slice().to_vec());
        }
    }
}

/// Runs the plant and every configured estimator on one shared measurement stream.
pub fn run_experiment(c: &ExperimentConfig) -> Result<ExperimentResult> {
    c.validate()?;
    let n = c.state_dim();
    let m = c.input_dim();
    let steps = c.steps();
    let a = c.design()?;
    let state_bounds = c.state_bounds()?;
    let input_bounds = c.input_bounds()?;

    let metadata = RunMetadata {
        seed: c.seed,
        projection_seed: sub_seed(c.seed, STREAM_PROJECTION),
        excitation_seed: sub_seed(c.seed, STREAM_EXCITATION),
        noise_seed: sub_seed(c.seed, STREAM_NOISE),
        config_hash: c.hash_hex(),
    };
    let projection = RandomProjection::new(m + n, c.hidden_dim, metadata.projection_seed)?;
    let plant = build_plant(c, &projection, &a)?;

    // Excitation in normalized units, then mapped onto the physical input range.
    let mut inputs = DMatrix::zeros(steps, m);
    if let Some(prms) = c.prms(metadata.excitation_seed) {
        let signal = prms_generate(&prms)?;
        for col in 0..m {
            inputs.column_mut(col).copy_from_slice(&signal);
        }
    }

    let times: Vec<f64> = (0..steps).map(|k| k as f64 * c.dt).collect();
    let mut truth = DMatrix::zeros(steps, n);
    let mut z = DVector::from_column_slice(&c.initial_state);
    for k in 0..steps {
        truth.set_row(k, &z.transpose());
        if k + 1 < steps {
            let u_norm: DVector<f64> = inputs.row(k).transpose();
            let u = match &input_bounds {
                Some(b) => b.denormalize(&u_norm)?,
                None => DVector::zeros(0),
            };
            z = rk4_step(plant.as_ref(), &z, &u, times[k], c.dt)?;
        }
    }

    let clean = normalize_rows(&truth, &state_bounds)?;
    let measurements = if c.is_noisy() {
        add_noise(
            &clean,
            &NoiseConfig {
                sigma: c.noise_sigma.clone(),
                seed: metadata.noise_seed,
            },
        )?
    } else {
        clean
    };
    let mut stream = Stream {
        inputs,
        measurements,
        phi: DMatrix::zeros(steps, c.hidden_dim),
    };
    for k in 0..steps {
        let phi = projection.hidden_output(&stream.model_input(k))?;
        stream.phi.set_row(k, &phi.transpose());
    }

    let mut methods = Vec::with_capacity(c.methods.len());
    for &method in &c.methods {
        let mut result = match method {
            Method::LyapunovElm => {
                run_lyapunov(c, &a, &projection, &stream, &state_bounds, &times)?
            }
            Method::OnlineElm => run_online(c, &a, &projection, &stream, &state_bounds, &times)?,
        };
        if result.diverged.is_none() {
            result.rmse = Some(normalized_rmse(&truth, &result.estimates, &state_bounds)?);
        }
        methods.push(result);
    }

    Ok(ExperimentResult {
        config: c.clone(),
        times,
        truth,
        methods,
        metadata,
    })
}

fn run_lyapunov(
    c: &ExperimentConfig,
    a: &DesignMatrix,
    projection: &RandomProjection,
    stream: &Stream,
    bounds: &NormalizationBounds,
    times: &[f64],
) -> Result<MethodResult> {
    let n = c.state_dim();
    let steps = times.len();
    let mut est = LyapunovEstimator::new(
        a.clone(),
        projection.clone(),
        OutputWeights::zeros(c.hidden_dim, n),
        stream.measurement(0),
    )?
    .with_gain(c.adaptation_gain)?;
    if let Some(xi) = c.dead_zone_xi {
        est = est.with_dead_zone(stability_threshold(a, xi)?.gamma)?;
    }
    let mut estimates = DMatrix::from_element(steps, n, f64::NAN);
    let mut logger = WeightLogger::new(steps, c.weight_log_points, c.hidden_dim, n);
    let mut diverged = None;
    for k in 0..steps {
        let s = est.state();
        estimates.set_row(k, &denormalize_row(&s.z_hat, bounds).transpose());
        logger.record(k, times[k], &s.w_hat);
        if k + 1 == steps {
            break;
        }
        match est.step_with_phi(&stream.measurement(k), &stream.phi(k), c.dt) {
            Ok(()) => {}
            Err(Error::Divergence { t, norm }) => {
                diverged = Some((t, norm));
                break;
            }
            Err(e) => return Err(e),
        }
    }
    Ok(MethodResult {
        method: Method::LyapunovElm,
        estimates,
        weights: logger.log,
        rmse: None,
        diverged,
    })
}

fn run_online(
    c: &ExperimentConfig,
    a: &DesignMatrix,
    projection: &RandomProjection,
    stream: &Stream,
    bounds: &NormalizationBounds,
    times: &[f64],
) -> Result<MethodResult> {
    let n = c.state_dim();
    let m = c.input_dim();
    let steps = times.len();
    let mut window = NarxWindow::new(usize::from(m > 0), 1, m, n)?;
    let mut state: Option<OnlineState> = None;
    let w0 = DMatrix::zeros(c.hidden_dim, n);

    let mut estimates = DMatrix::from_element(steps, n, f64::NAN);
    let mut logger = WeightLogger::new(steps, c.weight_log_points, c.hidden_dim, n);
    let mut diverged = None;
    let mut z_hat = stream.measurement(0);

    for k in 0..steps {
        let u_k: DVector<f64> = stream.inputs.row(k).transpose();
        let y_k = stream.measurement(k);
        if let Some((x, y)) = window.push(&u_k, &y_k)? {
            let phi = projection.hidden_output(&x)?;
            let target = match c.online_target {
                OnlineTarget::SharedStructure => {
                    let y_prev = x.rows(x.len() - n, n).into_owned();
                    (&y - &y_prev) / c.dt - a.as_matrix() * &y_prev
                }
                OnlineTarget::NextState => y,
            };
            match state.as_mut() {
                None => {
                    state = Some(OnlineState::init(
                        &DMatrix::from_row_slice(1, phi.len(), phi.as_slice()),
                        &DMatrix::from_row_slice(1, n, target.as_slice()),
                        c.lambda,
                    )?)
                }
                Some(s) => match s.update_one(&phi, &target) {
                    Ok(()) => {}
                    Err(Error::NumericDrift { .. }) | Err(Error::Numeric(_)) => {
                        diverged = Some((times[k], z_hat.norm()));
                        break;
                    }
                    Err(e) => return Err(e),
                },
            }
        }
        let w = state.as_ref().map_or(&w0, |s| s.weights().as_matrix());
        estimates.set_row(k, &denormalize_row(&z_hat, bounds).transpose());
        logger.record(k, times[k], w);
        if k + 1 == steps {
            break;
        }
        let phi_k = stream.phi(k);
        match c.online_target {
            OnlineTarget::SharedStructure => {
                match propagate_fixed_weights(a, w, &z_hat, &phi_k, times[k], c.dt) {
                    Ok(next) => z_hat = next,
                    Err(Error::Divergence { t, norm }) => {
                        diverged = Some((t, norm));
                        break;
                    }
                    Err(e) => return Err(e),
                }
            }
            // one-step-ahead prediction of y(k+1) from [u(k), y(k)]
            OnlineTarget::NextState => z_hat = w.tr_mul(&phi_k),
        }
        if z_hat.iter().any(|v| !v.is_finite()) {
            diverged = Some((times[k + 1], z_hat.norm()));
            break;
        }
    }

    Ok(MethodResult {
        method: Method::OnlineElm,
        estimates,
        weights: logger.log,
        rmse: None,
        diverged,
    })
}
