use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;

use super::config::{ExperimentConfig, Method, PlantKind, BENCHMARK_NOISE_SIGMA};
use super::experiment::run_experiment;
use crate::error::{Error, Result};

pub const PAPER_SEEDS: std::ops::RangeInclusive<u64> = 1..=10;

const TABLE_PLANTS: [PlantKind; 2] = [PlantKind::DcMotor, PlantKind::Lorentz];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CaseKind {
    Clean,
    Noisy,
}

impl CaseKind {
    pub const ALL: [CaseKind; 2] = [CaseKind::Clean, CaseKind::Noisy];

    pub fn as_str(self) -> &'static str {
        match self {
            CaseKind::Clean => "clean",
            CaseKind::Noisy => "noisy",
        }
    }

    pub fn apply(self, mut c: ExperimentConfig) -> ExperimentConfig {
        c.noise_sigma = match self {
            CaseKind::Clean => Vec::new(),
            CaseKind::Noisy => vec![BENCHMARK_NOISE_SIGMA; c.state_dim()],
        };
        c
    }
}

/// RMSE of one method on one seeded run; `None` if it diverged.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub plant: PlantKind,
    pub case: CaseKind,
    pub seed: u64,
    pub method: Method,
    pub rmse: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PaperTables {
    pub records: Vec<RunRecord>,
}

impl PaperTables {
    pub fn rmse(&self, plant: PlantKind, case: CaseKind, method: Method) -> Vec<Option<f64>> {
        self.records
            .iter()
            .filter(|r| r.plant == plant && r.case == case && r.method == method)
            .map(|r| r.rmse)
            .collect()
    }

    /// Mean and sample standard deviation over non-diverged seeds.
    pub fn stats(&self, plant: PlantKind, case: CaseKind, method: Method) -> (f64, f64, usize) {
        let v: Vec<f64> = self
            .rmse(plant, case, method)
            .into_iter()
            .flatten()
            .collect();
        let n = v.len();
        if n == 0 {
            return (f64::NAN, f64::NAN, 0);
        }
        let mean = v.iter().sum::<f64>() / n as f64;
        let var = if n > 1 {
            v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64
        } else {
            0.0
        };
        (mean, var.sqrt(), n)
    }

    /// Seeds on which `better` has a strictly lower RMSE than `worse`.
    /// A diverged run always loses.
    pub fn wins(&self, plant: PlantKind, case: CaseKind, better: Method, worse: Method) -> usize {
        self.rmse(plant, case, better)
            .into_iter()
            .zip(self.rmse(plant, case, worse))
            .filter(|(b, w)| match (b, w) {
                (Some(b), Some(w)) => b < w,
                (Some(_), None) => true,
                _ => false,
            })
            .count()
    }

    pub fn runs_csv(&self) -> String {
        let mut s = String::from("plant,case,seed,method,rmse\n");
        for r in &self.records {
            let v = r.rmse.map_or("diverged".to_string(), |v| v.to_string());
            let _ = writeln!(
                s,
                "{},{},{},{},{v}",
                r.plant,
                r.case.as_str(),
                r.seed,
                r.method
            );
        }
        s
    }

    pub fn tables_csv(&self) -> String {
        let mut s = String::from("plant,case,method,mean_rmse,std_rmse,runs\n");
        for (plant, case, method) in self.cells() {
            let (mean, std, n) = self.stats(plant, case, method);
            let _ = writeln!(s, "{plant},{},{method},{mean},{std},{n}", case.as_str());
        }
        s
    }

    pub fn tables_txt(&self) -> String {
        let mut s = String::new();
        for plant in TABLE_PLANTS {
            let _ = writeln!(
                s,
                "{plant}: normalized RMSE over {} seeds",
                PAPER_SEEDS.count()
            );
            let _ = writeln!(s, "{:<14} {:>22} {:>22}", "method", "clean", "noisy");
            for method in Method::ALL {
                let _ = write!(s, "{:<14}", method.as_str());
                for case in CaseKind::ALL {
                    let (mean, std, _) = self.stats(plant, case, method);
                    let _ = write!(s, " {:>22}", format!("{mean:.5} ± {std:.5}"));
                }
                s.push('\n');
            }
            s.push('\n');
        }
        s
    }

    fn cells(&self) -> impl Iterator<Item = (PlantKind, CaseKind, Method)> {
        TABLE_PLANTS.into_iter().flat_map(|p| {
            CaseKind::ALL
                .into_iter()
                .flat_map(move |c| Method::ALL.into_iter().map(move |m| (p, c, m)))
        })
    }
}

/// Runs both benchmark plants, clean and noisy, over [`PAPER_SEEDS`].
/// With `out` set, writes `runs.csv`, `tables.csv` and `tables.txt` there.
pub fn reproduce_paper_tables(out: Option<&Path>) -> Result<PaperTables> {
    let jobs: Vec<(PlantKind, CaseKind, u64)> = TABLE_PLANTS
        .into_iter()
        .flat_map(|p| {
            CaseKind::ALL
                .into_iter()
                .flat_map(move |c| PAPER_SEEDS.map(move |s| (p, c, s)))
        })
        .collect();
    let per_job: Vec<Vec<RunRecord>> = jobs
        .par_iter()
        .map(|&(plant, case, seed)| {
            let mut c = case.apply(ExperimentConfig::defaults_for(plant));
            c.seed = seed;
            c.methods = Method::ALL.to_vec();
            let r = run_experiment(&c)?;
            Ok(r.methods
                .iter()
                .map(|m| RunRecord {
                    plant,
                    case,
                    seed,
                    method: m.method,
                    rmse: m.rmse,
                })
                .collect())
        })
        .collect::<Result<_>>()?;
    let tables = PaperTables {
        records: per_job.into_iter().flatten().collect(),
    };
    if let Some(dir) = out {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        for (name, body) in [
            ("runs.csv", tables.runs_csv()),
            ("tables.csv", tables.tables_csv()),
            ("tables.txt", tables.tables_txt()),
        ] {
            let p = dir.join(name);
            std::fs::write(&p, body).map_err(|e| Error::io(&p, e))?;
        }
    }
    Ok(tables)
}
