use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use elm_sysid::harness::{
    export_csv, export_weights_csv, reproduce_paper_tables, run_experiment, summary_table,
    ExperimentConfig, PlantKind,
};
use elm_sysid::Error;

#[derive(Parser)]
#[command(
    name = "elm-sysid",
    version,
    about = "ELM-based system identification experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and export trajectories, weights and a summary.
    Run {
        /// TOML config; plant defaults are used when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        plant: Option<PlantKind>,
        /// Measurement noise std applied to every state, normalized units.
        #[arg(long)]
        noise_sigma: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long)]
        duration: Option<f64>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Regenerate the benchmark RMSE tables over the fixed seed set.
    Reproduce {
        #[arg(long, required = true)]
        paper_tables: bool,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
}

enum Failure {
    Config(Error),
    Diverged(String),
    Other(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidArgument(_) | Error::Format { .. } => Failure::Config(e),
            Error::Divergence { .. } => Failure::Diverged(e.to_string()),
            _ => Failure::Other(e),
        }
    }
}

fn load_config(
    config: Option<PathBuf>,
    plant: Option<PlantKind>,
    noise_sigma: Option<f64>,
    seed: Option<u64>,
    dt: Option<f64>,
    duration: Option<f64>,
) -> Result<ExperimentConfig, Error> {
    let fallback = plant.unwrap_or(PlantKind::DcMotor);
    let mut c = match &config {
        Some(path) => ExperimentConfig::from_file(path, fallback)?,
        None => ExperimentConfig::defaults_for(fallback),
    };
    if let Some(p) = plant {
        if p != c.plant {
            return Err(Error::InvalidArgument(format!(
                "--plant {p} conflicts with config plant {}",
                c.plant
            )));
        }
    }
    if let Some(s) = noise_sigma {
        c.noise_sigma = if s == 0.0 {
            Vec::new()
        } else {
            vec![s; c.state_dim()]
        };
    }
    if let Some(s) = seed {
        c.seed = s;
    }
    if let Some(v) = dt {
        c.dt = v;
    }
    if let Some(v) = duration {
        c.duration = v;
    }
    c.validate()?;
    Ok(c)
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Run {
            config,
            plant,
            noise_sigma,
            seed,
            dt,
            duration,
            out,
        } => {
            let c = load_config(config, plant, noise_sigma, seed, dt, duration)
                .map_err(Failure::Config)?;
            let r = run_experiment(&c)?;
            std::fs::create_dir_all(&out).map_err(|e| {
                Failure::Other(Error::Io {
                    path: out.clone(),
                    source: e,
                })
            })?;
            export_csv(&r, &out.join("trajectory.csv"))?;
            for m in &r.methods {
                export_weights_csv(m, &out.join(format!("weights_{}.csv", m.method)))?;
            }
            let label = format!("{} seed {}", c.plant, c.seed);
            let summary = summary_table(&[(label.as_str(), &r)]);
            let p = out.join("summary.txt");
            std::fs::write(&p, &summary)
                .map_err(|e| Failure::Other(Error::Io { path: p, source: e }))?;
            print!("{summary}");
            if let Some((m, (t, norm))) = r
                .methods
                .iter()
                .find_map(|m| m.diverged.map(|d| (m.method, d)))
            {
                return Err(Failure::Diverged(format!(
                    "{m} diverged at t = {t}: state norm {norm}"
                )));
            }
            Ok(())
        }
        Command::Reproduce {
            paper_tables: _,
            out,
        } => {
            let tables = reproduce_paper_tables(Some(&out))?;
            print!("{}", tables.tables_txt());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Diverged(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Config(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(Failure::Other(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(3)
        }
    }
}
