//! Excitation and measurement noise.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::rng::DetRng;

/// Pseudo-random multilevel sequence: a piecewise-constant signal whose
/// segment levels and hold times are drawn at random.
#[derive(Debug, Clone, PartialEq)]
pub struct PrmsConfig {
    pub levels: usize,
    pub lo: f64,
    pub hi: f64,
    pub hold_min: f64,
    pub hold_max: f64,
    pub seed: u64,
    pub duration: f64,
    pub dt: f64,
}

impl PrmsConfig {
    /// Five levels on `[-1, 1]`, holds of 0.05 to 0.5 time units.
    pub fn new(seed: u64, duration: f64, dt: f64) -> Self {
        Self {
            levels: 5,
            lo: -1.0,
            hi: 1.0,
            hold_min: 0.05,
            hold_max: 0.5,
            seed,
            duration,
            dt,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.levels < 2 {
            return Err(Error::invalid(format!(
                "PRMS needs at least 2 levels, got {}",
                self.levels
            )));
        }
        if !(self.lo < self.hi) || !self.lo.is_finite() || !self.hi.is_finite() {
            return Err(Error::invalid(format!(
                "PRMS amplitude range [{}, {}] is empty",
                self.lo, self.hi
            )));
        }
        if !(self.dt > 0.0 && self.duration > 0.0) {
            return Err(Error::invalid("PRMS duration and dt must be positive"));
        }
        if !(self.hold_min >= self.dt && self.hold_min <= self.hold_max)
            || !self.hold_max.is_finite()
        {
            return Err(Error::invalid(format!(
                "PRMS hold range [{}, {}] must satisfy dt <= h_min <= h_max",
                self.hold_min, self.hold_max
            )));
        }
        Ok(())
    }

    pub fn samples(&self) -> usize {
        (self.duration / self.dt).round() as usize
    }

    pub fn level_values(&self) -> Vec<f64> {
        let step = (self.hi - self.lo) / (self.levels - 1) as f64;
        (0..self.levels)
            .map(|i| {
                if i + 1 == self.levels {
                    self.hi
                } else {
                    self.lo + step * i as f64
                }
            })
            .collect()
    }
}

/// Samples `round(duration / dt)` values. Per segment the hold time is drawn
/// first (uniform on `[hold_min, hold_max]`, rounded to whole samples), then
/// the level (uniform over the equispaced levels).
pub fn prms_generate(c: &PrmsConfig) -> Result<Vec<f64>> {
    c.validate()?;
    let n = c.samples();
    let values = c.level_values();
    let mut rng = DetRng::new(c.seed);
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let hold = rng.uniform(c.hold_min, c.hold_max);
        let len = ((hold / c.dt).round() as usize).max(1);
        let level = values[rng.index(values.len())];
        let take = len.min(n - out.len());
        out.extend(std::iter::repeat_n(level, take));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseConfig {
    /// Standard deviation per dimension, in normalized units.
    pub sigma: Vec<f64>,
    pub seed: u64,
}

impl NoiseConfig {
    pub fn uniform(sigma: f64, dim: usize, seed: u64) -> Self {
        Self {
            sigma: vec![sigma; dim],
            seed,
        }
    }

    pub fn is_silent(&self) -> bool {
        self.sigma.iter().all(|&s| s == 0.0)
    }
}

/// Adds zero-mean Gaussian noise to each column of `signal` (`N x d`).
/// Draws proceed row by row, column by column.
pub fn add_noise(signal: &DMatrix<f64>, n: &NoiseConfig) -> Result<DMatrix<f64>> {
    if n.sigma.len() != signal.ncols() {
        return Err(Error::invalid(format!(
            "noise sigma has {} entries, signal has {} columns",
            n.sigma.len(),
            signal.ncols()
        )));
    }
    if let Some(s) = n.sigma.iter().find(|s| !(**s >= 0.0) || !s.is_finite()) {
        return Err(Error::invalid(format!(
            "noise sigma must be finite and >= 0, got {s}"
        )));
    }
    let mut rng = DetRng::new(n.seed);
    let mut out = signal.clone();
    for r in 0..out.nrows() {
        for (c, &sigma) in n.sigma.iter().enumerate() {
            out[(r, c)] += sigma * rng.gaussian();
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(seed: u64) -> PrmsConfig {
        PrmsConfig::new(seed, 20.0, 1e-3)
    }

    #[test]
    fn two_levels_are_binary() {
        let c = PrmsConfig {
            levels: 2,
            ..config(1)
        };
        let s = prms_generate(&c).unwrap();
        assert_eq!(s.len(), 20_000);
        assert!(s.iter().all(|&v| v == -1.0 || v == 1.0));
        assert!(s.contains(&-1.0) && s.contains(&1.0));
    }

    #[test]
    fn samples_and_segments_within_limits() {
        let c = PrmsConfig {
            lo: -0.3,
            hi: 0.8,
            levels: 4,
            ..config(2)
        };
        let s = prms_generate(&c).unwrap();
        assert!(s.iter().all(|&v| (c.lo..=c.hi).contains(&v)));
        // Segment boundaries are only visible when the level changes, so run
        // lengths are whole multiples of single holds; only check the minimum
        // and the bound for interior runs.
        let min_len = (c.hold_min / c.dt).round() as usize;
        let mut run = 1;
        let mut runs = Vec::new();
        for w in s.windows(2) {
            if w[0] == w[1] {
                run += 1;
            } else {
                runs.push(run);
                run = 1;
            }
        }
        assert!(runs.iter().skip(1).all(|&r| r >= min_len));
    }

    #[test]
    fn hold_lengths_with_distinct_levels() {
        // With a huge level set, consecutive segments almost never repeat a
        // level, so runs are single holds.
        let c = PrmsConfig {
            levels: 1_000_000,
            ..config(3)
        };
        let s = prms_generate(&c).unwrap();
        let (lo, hi) = (
            (c.hold_min / c.dt).round() as usize,
            (c.hold_max / c.dt).round() as usize,
        );
        let mut run = 1;
        let mut runs = Vec::new();
        for w in s.windows(2) {
            if w[0] == w[1] {
                run += 1;
            } else {
                runs.push(run);
                run = 1;
            }
        }
        assert!(runs.len() > 20);
        assert!(runs.iter().all(|&r| r >= lo && r <= hi), "{runs:?}");
    }

    #[test]
    fn deterministic_per_seed() {
        assert_eq!(
            prms_generate(&config(5)).unwrap(),
            prms_generate(&config(5)).unwrap()
        );
        assert_ne!(
            prms_generate(&config(5)).unwrap(),
            prms_generate(&config(6)).unwrap()
        );
    }

    #[test]
    fn level_histogram_is_uniform() {
        // Count segments (not samples) per level over a long run.
        let c = PrmsConfig {
            duration: 20_000.0,
            dt: 0.05,
            hold_min: 0.05,
            hold_max: 0.05,
            ..config(7)
        };
        let s = prms_generate(&c).unwrap();
        let values = c.level_values();
        let mut counts = vec![0usize; values.len()];
        for v in &s {
            counts[values.iter().position(|x| x == v).unwrap()] += 1;
        }
        let n = s.len() as f64;
        let expected = n / values.len() as f64;
        let chi2: f64 = counts
            .iter()
            .map(|&c| (c as f64 - expected).powi(2) / expected)
            .sum();
        // chi-square, 4 degrees of freedom, p = 0.001
        assert!(chi2 < 18.467, "chi2 {chi2}, counts {counts:?}");
    }

    #[test]
    fn invalid_configs() {
        assert!(prms_generate(&PrmsConfig {
            levels: 1,
            ..config(1)
        })
        .is_err());
        assert!(prms_generate(&PrmsConfig {
            lo: 1.0,
            hi: 1.0,
            ..config(1)
        })
        .is_err());
        assert!(prms_generate(&PrmsConfig {
            hold_min: 1e-4,
            ..config(1)
        })
        .is_err());
        assert!(prms_generate(&PrmsConfig {
            hold_min: 1.0,
            hold_max: 0.5,
            ..config(1)
        })
        .is_err());
        assert!(prms_generate(&PrmsConfig {
            duration: 0.0,
            ..config(1)
        })
        .is_err());
    }

    #[test]
    fn zero_noise_is_identity() {
        let s = DMatrix::from_fn(50, 2, |i, j| i as f64 * 0.1 - j as f64);
        let out = add_noise(&s, &NoiseConfig::uniform(0.0, 2, 3)).unwrap();
        assert_eq!(out, s);
    }

    #[test]
    fn noise_statistics() {
        let n = 100_000;
        let s = DMatrix::zeros(n, 1);
        let out = add_noise(&s, &NoiseConfig::uniform(0.01, 1, 4)).unwrap();
        let mean = out.mean();
        let std = (out.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64).sqrt();
        assert!(mean.abs() <= 4.0 * 0.01 / (n as f64).sqrt());
        assert!((std - 0.01).abs() <= 0.02 * 0.01);
    }

    #[test]
    fn noise_deterministic_and_shape_preserving() {
        let s = DMatrix::from_element(10, 3, 1.0);
        let cfg = NoiseConfig {
            sigma: vec![0.1, 0.0, 0.2],
            seed: 9,
        };
        let a = add_noise(&s, &cfg).unwrap();
        assert_eq!(a, add_noise(&s, &cfg).unwrap());
        assert_eq!(a.shape(), s.shape());
        assert!(a.column(1).iter().all(|&v| v == 1.0));
        assert!(add_noise(&s, &NoiseConfig::uniform(0.1, 2, 1)).is_err());
        assert!(add_noise(&s, &NoiseConfig::uniform(-0.1, 3, 1)).is_err());
    }
}
