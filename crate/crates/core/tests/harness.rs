use nalgebra::{DMatrix, DVector};

use elm_sysid::elm_model::{OutputWeights, RandomProjection};
use elm_sysid::harness::{
    export_csv, read_csv, run_experiment, summary_table, ExperimentConfig, Method, PlantKind,
};
use elm_sysid::lyapunov_estimator::{DesignMatrix, Integrator, LyapunovEstimator};
use elm_sysid::Error;

fn short(plant: PlantKind, duration: f64) -> ExperimentConfig {
    ExperimentConfig {
        duration,
        ..ExperimentConfig::defaults_for(plant)
    }
}

#[test]
fn identical_configs_export_identical_bytes() {
    let mut c = short(PlantKind::DcMotor, 0.3);
    c.noise_sigma = vec![0.01, 0.01];
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    export_csv(&run_experiment(&c).unwrap(), &a).unwrap();
    export_csv(&run_experiment(&c).unwrap(), &b).unwrap();
    assert_eq!(std::fs::read(a).unwrap(), std::fs::read(b).unwrap());
}

#[test]
fn different_seeds_differ() {
    let a = run_experiment(&short(PlantKind::DcMotor, 0.2)).unwrap();
    let b = run_experiment(&ExperimentConfig {
        seed: 2,
        ..short(PlantKind::DcMotor, 0.2)
    })
    .unwrap();
    assert_ne!(a.truth, b.truth);
    assert_ne!(a.metadata.config_hash, b.metadata.config_hash);
}

#[test]
fn methods_see_the_same_stream() {
    // Each method's result must not depend on which other methods run alongside it.
    let mut c = short(PlantKind::Lorentz, 0.3);
    c.noise_sigma = vec![0.01; 3];
    let both = run_experiment(&c).unwrap();
    for m in Method::ALL {
        let alone = run_experiment(&ExperimentConfig {
            methods: vec![m],
            ..c.clone()
        })
        .unwrap();
        assert_eq!(alone.truth, both.truth);
        assert_eq!(
            alone.metadata.projection_seed,
            both.metadata.projection_seed
        );
        assert_eq!(alone.metadata.noise_seed, both.metadata.noise_seed);
        assert_eq!(alone.method(m), both.method(m));
    }
}

#[test]
fn csv_round_trip_is_exact() {
    let r = run_experiment(&short(PlantKind::DcMotor, 0.1)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("t.csv");
    export_csv(&r, &p).unwrap();
    let t = read_csv(&p).unwrap();
    let z2 = t.column("z2").unwrap();
    let zhat = t.column("zhat_lyapunov_elm_2").unwrap();
    for k in 0..r.times.len() {
        assert_eq!(z2[k], r.truth[(k, 1)]);
        assert_eq!(
            zhat[k],
            r.method(Method::LyapunovElm).unwrap().estimates[(k, 1)]
        );
    }
}

#[test]
fn empty_method_set_warns() {
    let r = run_experiment(&ExperimentConfig {
        methods: vec![],
        ..short(PlantKind::Lorentz, 0.1)
    })
    .unwrap();
    assert!(summary_table(&[("lorentz", &r)]).contains("warning"));
}

#[test]
fn lyapunov_identifies_a_plant_inside_its_model_class() {
    let r = run_experiment(&short(PlantKind::SyntheticElm, 20.0)).unwrap();
    let rmse = r.rmse(Method::LyapunovElm).unwrap();
    assert!(rmse < 1e-2, "rmse {rmse}");
}

#[test]
fn noise_degrades_the_online_comparator() {
    let clean = run_experiment(&short(PlantKind::DcMotor, 2.0)).unwrap();
    let mut c = short(PlantKind::DcMotor, 2.0);
    c.noise_sigma = vec![0.01, 0.01];
    let noisy = run_experiment(&c).unwrap();
    assert!(noisy.rmse(Method::OnlineElm).unwrap() > clean.rmse(Method::OnlineElm).unwrap());
}

#[test]
fn invalid_configs_are_rejected() {
    let cases = [
        ExperimentConfig {
            dt: 0.0,
            ..short(PlantKind::DcMotor, 1.0)
        },
        ExperimentConfig {
            design_matrix: vec![vec![1.0, 0.0], vec![0.0, -1.0]],
            ..short(PlantKind::DcMotor, 1.0)
        },
        ExperimentConfig {
            noise_sigma: vec![0.1],
            ..short(PlantKind::DcMotor, 1.0)
        },
        ExperimentConfig {
            lambda: -1.0,
            ..short(PlantKind::Lorentz, 1.0)
        },
    ];
    for c in cases {
        assert!(matches!(run_experiment(&c), Err(Error::InvalidArgument(_))));
    }
    assert!(ExperimentConfig::from_toml_str("bogus_key = 1", PlantKind::DcMotor).is_err());
}

#[test]
fn config_toml_round_trip() {
    let c = ExperimentConfig::from_toml_str(
        "plant = \"lorentz\"\nseed = 7\nnoise_sigma = [0.01, 0.01, 0.01]",
        PlantKind::DcMotor,
    )
    .unwrap();
    assert_eq!(c.plant, PlantKind::Lorentz);
    assert_eq!(c.seed, 7);
    assert_eq!(
        c.hidden_dim,
        ExperimentConfig::defaults_for(PlantKind::Lorentz).hidden_dim
    );
    let back = ExperimentConfig::from_toml_str(&c.to_toml_string(), PlantKind::DcMotor).unwrap();
    assert_eq!(back, c);
    assert_eq!(back.hash_hex(), c.hash_hex());
}

/// Fixed measurement; the estimator ODE is then autonomous and a fine-step
/// RK4 run serves as reference.
#[test]
fn rk4_beats_euler_against_fine_reference() {
    let a = DesignMatrix::diagonal(&[-50.0, -50.0]).unwrap();
    let proj = RandomProjection::new(3, 8, 5).unwrap();
    let z = DVector::from_vec(vec![0.4, -0.2]);
    let phi = proj
        .hidden_output(&DVector::from_vec(vec![0.1, 0.4, -0.2]))
        .unwrap();
    let run = |integrator, dt: f64| {
        let mut est = LyapunovEstimator::new(
            a.clone(),
            proj.clone(),
            OutputWeights::zeros(8, 2),
            DVector::zeros(2),
        )
        .unwrap()
        .with_gain(100.0)
        .unwrap()
        .with_integrator(integrator);
        let steps = (0.2 / dt).round() as usize;
        for _ in 0..steps {
            est.step_with_phi(&z, &phi, dt).unwrap();
        }
        let s = est.state();
        (s.z_hat.clone(), s.w_hat.clone())
    };
    let reference = run(Integrator::Rk4, 1e-5);
    let err = |(z_hat, w_hat): (DVector<f64>, DMatrix<f64>)| {
        (z_hat - &reference.0).norm() + (w_hat - &reference.1).norm()
    };
    let rk4 = err(run(Integrator::Rk4, 1e-3));
    let euler = err(run(Integrator::Euler, 1e-3));
    assert!(rk4 < 1e-6, "rk4 error {rk4}");
    assert!(euler > 100.0 * rk4, "euler {euler} vs rk4 {rk4}");
}
