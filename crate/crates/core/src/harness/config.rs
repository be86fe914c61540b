//! Declarative experiment description.
//!
//! Config files are flat TOML documents. Every key is optional: missing keys
//! take the defaults of the selected `plant`, unknown keys are rejected.
//!
//! | key | meaning |
//! |-----|---------|
//! | `plant` | `dc_motor`, `lorentz` or `synthetic_elm` |
//! | `c1` .. `c5` | DC-motor constants |
//! | `lorentz_sigma`, `lorentz_r`, `lorentz_b` | Lorentz parameters |
//! | `design_matrix` | Hurwitz `A`, array of rows |
//! | `hidden_dim`, `seed`, `dt`, `duration`, `lambda` | model and run settings |
//! | `adaptation_gain` | scalar gain of the Lyapunov law |
//! | `dead_zone_xi` | optional `xi`; adaptation freezes while `‖e‖ <= xi/‖mu‖` |
//! | `prms_levels`, `prms_lo`, `prms_hi`, `prms_hold_min`, `prms_hold_max` | excitation, in normalized input units |
//! | `noise_sigma` | per-state measurement noise (normalized units), `[]` for none |
//! | `methods` | subset of `["lyapunov_elm", "online_elm"]` |
//! | `online_target` | `shared_structure` or `next_state` |
//! | `initial_state`, `state_lower`, `state_upper`, `input_lower`, `input_upper` | physical units |
//! | `synthetic_weight_scale`, `disturbance_xi`, `disturbance_omega` | synthetic plant only |
//! | `weight_log_points` | cap on logged weight snapshots |

use std::fmt;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::batch_trainer::DEFAULT_LAMBDA;
use crate::elm_model::NormalizationBounds;
use crate::error::{Error, Result};
use crate::lyapunov_estimator::DesignMatrix;
use crate::plants::{DcMotorParams, LorentzParams};
use crate::signals::PrmsConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlantKind {
    DcMotor,
    Lorentz,
    SyntheticElm,
}

impl PlantKind {
    pub fn as_str(self) -> &'static str {
        match self {
            PlantKind::DcMotor => "dc_motor",
            PlantKind::Lorentz => "lorentz",
            PlantKind::SyntheticElm => "synthetic_elm",
        }
    }
}

impl fmt::Display for PlantKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for PlantKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dc_motor" => Ok(PlantKind::DcMotor),
            "lorentz" => Ok(PlantKind::Lorentz),
            "synthetic_elm" => Ok(PlantKind::SyntheticElm),
            other => Err(Error::invalid(format!("unknown plant `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    OnlineElm,
    LyapunovElm,
}

impl Method {
    pub const ALL: [Method; 2] = [Method::OnlineElm, Method::LyapunovElm];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::OnlineElm => "online_elm",
            Method::LyapunovElm => "lyapunov_elm",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// What the OS-ELM comparator regresses on each NARX pair `(x(k), y(k))`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OnlineTarget {
    /// Finite-difference residual `(y(k) - y(k-1))/dt - A y(k-1)`: the same
    /// continuous-time model as the Lyapunov estimator, whose state is then
    /// integrated with the RLS weights.
    SharedStructure,
    /// `y(k)` itself; the estimate is the one-step-ahead prediction.
    NextState,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub plant: PlantKind,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
    pub c5: f64,
    pub lorentz_sigma: f64,
    pub lorentz_r: f64,
    pub lorentz_b: f64,
    pub design_matrix: Vec<Vec<f64>>,
    pub hidden_dim: usize,
    pub seed: u64,
    pub dt: f64,
    pub duration: f64,
    pub lambda: f64,
    pub adaptation_gain: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dead_zone_xi: Option<f64>,
    /// Zero disables excitation (autonomous plants).
    pub prms_levels: usize,
    pub prms_lo: f64,
    pub prms_hi: f64,
    pub prms_hold_min: f64,
    pub prms_hold_max: f64,
    pub noise_sigma: Vec<f64>,
    pub methods: Vec<Method>,
    pub online_target: OnlineTarget,
    pub initial_state: Vec<f64>,
    pub state_lower: Vec<f64>,
    pub state_upper: Vec<f64>,
    pub input_lower: Vec<f64>,
    pub input_upper: Vec<f64>,
    pub synthetic_weight_scale: f64,
    pub disturbance_xi: f64,
    pub disturbance_omega: f64,
    pub weight_log_points: usize,
}

/// Lyapunov adaptation gain used by the benchmark defaults.
pub const BENCHMARK_ADAPTATION_GAIN: f64 = 1e4;

/// Measurement noise of the "noisy" benchmark cases, normalized units.
pub const BENCHMARK_NOISE_SIGMA: f64 = 0.01;

fn diag(entries: &[f64]) -> Vec<Vec<f64>> {
    (0..entries.len())
        .map(|i| {
            (0..entries.len())
                .map(|j| if i == j { entries[i] } else { 0.0 })
                .collect()
        })
        .collect()
}

impl ExperimentConfig {
    pub fn defaults_for(plant: PlantKind) -> Self {
        let dc = DcMotorParams::default();
        let lor = LorentzParams::default();
        let base = Self {
            plant,
            c1: dc.c1,
            c2: dc.c2,
            c3: dc.c3,
            c4: dc.c4,
            c5: dc.c5,
            lorentz_sigma: lor.sigma,
            lorentz_r: lor.r,
            lorentz_b: lor.b,
            design_matrix: diag(&[-50.0, -50.0]),
            hidden_dim: 8,
            seed: 1,
            dt: 1e-4,
            duration: 10.0,
            lambda: DEFAULT_LAMBDA,
            adaptation_gain: BENCHMARK_ADAPTATION_GAIN,
            dead_zone_xi: None,
            prms_levels: 5,
            prms_lo: -1.0,
            prms_hi: 1.0,
            prms_hold_min: 0.05,
            prms_hold_max: 0.5,
            noise_sigma: Vec::new(),
            methods: Method::ALL.to_vec(),
            online_target: OnlineTarget::SharedStructure,
            initial_state: vec![0.0, 0.0],
            state_lower: vec![0.0, -1500.0],
            state_upper: vec![1.5, 1500.0],
            input_lower: vec![-0.1],
            input_upper: vec![0.1],
            synthetic_weight_scale: 10.0,
            disturbance_xi: 0.0,
            disturbance_omega: 5.0,
            weight_log_points: 2000,
        };
        match plant {
            PlantKind::DcMotor => base,
            PlantKind::Lorentz => Self {
                design_matrix: diag(&[-60.0, -60.0, -120.0]),
                hidden_dim: 12,
                duration: 20.0,
                prms_levels: 0,
                initial_state: vec![1.0, 1.0, 1.0],
                state_lower: vec![-25.0, -25.0, 0.0],
                state_upper: vec![25.0, 25.0, 50.0],
                input_lower: Vec::new(),
                input_upper: Vec::new(),
                ..base
            },
            PlantKind::SyntheticElm => Self {
                dt: 1e-3,
                duration: 20.0,
                initial_state: vec![0.0, 0.0],
                state_lower: vec![-1.0, -1.0],
                state_upper: vec![1.0, 1.0],
                input_lower: vec![-1.0],
                input_upper: vec![1.0],
                ..base
            },
        }
    }

    /// Parses a TOML document on top of the defaults of its `plant`
    /// (or of `fallback_plant` when the document names none).
    pub fn from_toml_str(text: &str, fallback_plant: PlantKind) -> Result<Self> {
        let overrides: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| Error::invalid(format!("config: {e}")))?;
        let plant = match overrides.get("plant") {
            Some(v) => v
                .as_str()
                .ok_or_else(|| Error::invalid("config: `plant` must be a string"))?
                .parse()?,
            None => fallback_plant,
        };
        let mut merged = toml::Table::try_from(Self::defaults_for(plant))
            .map_err(|e| Error::invalid(format!("config: {e}")))?;
        merged.extend(overrides);
        let cfg: Self = merged
            .try_into()
            .map_err(|e: toml::de::Error| Error::invalid(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path, fallback_plant: PlantKind) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text, fallback_plant).map_err(|e| Error::Format {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// SHA-256 of the canonical TOML rendering.
    pub fn hash_hex(&self) -> String {
        Sha256::digest(self.to_toml_string().as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    pub fn state_dim(&self) -> usize {
        match self.plant {
            PlantKind::DcMotor => 2,
            PlantKind::Lorentz => 3,
            PlantKind::SyntheticElm => self.design_matrix.len(),
        }
    }

    pub fn input_dim(&self) -> usize {
        match self.plant {
            PlantKind::DcMotor => 1,
            PlantKind::Lorentz => 0,
            PlantKind::SyntheticElm => self.input_lower.len(),
        }
    }

    pub fn steps(&self) -> usize {
        (self.duration / self.dt).round() as usize
    }

    pub fn dc_motor_params(&self) -> DcMotorParams {
        DcMotorParams {
            c1: self.c1,
            c2: self.c2,
            c3: self.c3,
            c4: self.c4,
            c5: self.c5,
        }
    }

    pub fn lorentz_params(&self) -> Result<LorentzParams> {
        LorentzParams::new(self.lorentz_sigma, self.lorentz_r, self.lorentz_b)
    }

    pub fn design(&self) -> Result<DesignMatrix> {
        let n = self.design_matrix.len();
        if n == 0 || self.design_matrix.iter().any(|row| row.len() != n) {
            return Err(Error::invalid(
                "design_matrix must be a non-empty square array",
            ));
        }
        DesignMatrix::new(DMatrix::from_fn(n, n, |i, j| self.design_matrix[i][j]))
    }

    pub fn state_bounds(&self) -> Result<NormalizationBounds> {
        NormalizationBounds::new(self.state_lower.clone(), self.state_upper.clone())
    }

    pub fn input_bounds(&self) -> Result<Option<NormalizationBounds>> {
        if self.input_dim() == 0 {
            return Ok(None);
        }
        NormalizationBounds::new(self.input_lower.clone(), self.input_upper.clone()).map(Some)
    }

    pub fn prms(&self, seed: u64) -> Option<PrmsConfig> {
        (self.prms_levels > 0 && self.input_dim() > 0).then_some(PrmsConfig {
            levels: self.prms_levels,
            lo: self.prms_lo,
            hi: self.prms_hi,
            hold_min: self.prms_hold_min,
            hold_max: self.prms_hold_max,
            seed,
            duration: self.duration,
            dt: self.dt,
        })
    }

    pub fn is_noisy(&self) -> bool {
        self.noise_sigma.iter().any(|&s| s > 0.0)
    }

    /// Checks everything that can be checked before integrating.
    pub fn validate(&self) -> Result<()> {
        let n = self.state_dim();
        if n == 0 {
            return Err(Error::invalid("state dimension must be positive"));
        }
        let a = self.design()?;
        if a.dim() != n {
            return Err(Error::invalid(format!(
                "design_matrix is {0}x{0} but the {1} plant has {n} states",
                a.dim(),
                self.plant
            )));
        }
        if self.hidden_dim == 0 {
            return Err(Error::invalid("hidden_dim must be positive"));
        }
        if !(self.dt > 0.0 && self.dt.is_finite())
            || !(self.duration > 0.0 && self.duration.is_finite())
        {
            return Err(Error::invalid(
                "dt and duration must be positive and finite",
            ));
        }
        if self.steps() < 2 {
            return Err(Error::invalid("duration must cover at least two steps"));
        }
        crate::batch_trainer::check_lambda(self.lambda)?;
        if !(self.adaptation_gain >= 0.0 && self.adaptation_gain.is_finite()) {
            return Err(Error::invalid("adaptation_gain must be finite and >= 0"));
        }
        if let Some(xi) = self.dead_zone_xi {
            if !(xi >= 0.0) {
                return Err(Error::invalid("dead_zone_xi must be >= 0"));
            }
        }
        if self.initial_state.len() != n {
            return Err(Error::invalid(format!(
                "initial_state has {} entries, expected {n}",
                self.initial_state.len()
            )));
        }
        let bounds = self.state_bounds()?;
        if bounds.dim() != n {
            return Err(Error::invalid(format!(
                "state bounds must have {n} entries"
            )));
        }
        if let Some(ib) = self.input_bounds()? {
            if ib.dim() != self.input_dim() {
                return Err(Error::invalid(
                    "input bounds do not match the plant input dimension",
                ));
            }
        }
        if !self.noise_sigma.is_empty() && self.noise_sigma.len() != n {
            return Err(Error::invalid(format!(
                "noise_sigma has {} entries, expected 0 or {n}",
                self.noise_sigma.len()
            )));
        }
        if self
            .noise_sigma
            .iter()
            .any(|s| !(*s >= 0.0) || !s.is_finite())
        {
            return Err(Error::invalid(
                "noise_sigma entries must be finite and >= 0",
            ));
        }
        if let Some(p) = self.prms(0) {
            p.validate()?;
        }
        if self.plant == PlantKind::SyntheticElm && self.input_dim() == 0 {
            return Err(Error::invalid(
                "synthetic_elm needs at least one excitation input",
            ));
        }
        if self.plant == PlantKind::Lorentz {
            self.lorentz_params()?;
        }
        let mut seen = self.methods.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != self.methods.len() {
            return Err(Error::invalid("methods must not repeat"));
        }
        if self.weight_log_points == 0 {
            return Err(Error::invalid("weight_log_points must be positive"));
        }
        Ok(())
    }
}
