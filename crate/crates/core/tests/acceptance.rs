//! Acceptance suite. Prints one PASS/FAIL line per criterion and a tally.
//! With `ACCEPTANCE_STRICT=1` the process exits non-zero if any criterion fails.

use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};

use elm_sysid::batch_trainer::{build_hidden_matrix, ridge_solve, DesignMatrices, DEFAULT_LAMBDA};
use elm_sysid::elm_model::{OutputWeights, RandomProjection};
use elm_sysid::harness::{
    reproduce_paper_tables, CaseKind, Method, PaperTables, PlantKind, BENCHMARK_ADAPTATION_GAIN,
    PAPER_SEEDS,
};
use elm_sysid::lyapunov_estimator::{
    lyapunov_value, stability_threshold, DesignMatrix, LyapunovEstimator,
};
use elm_sysid::os_elm::init_online;
use elm_sysid::plants::{rk4, Plant, SyntheticElmPlant};
use elm_sysid::rng::DetRng;
use elm_sysid::signals::{prms_generate, PrmsConfig};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn rel(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).norm() / b.norm()
}

fn rls_batch_equivalence() -> Outcome {
    let mut rng = DetRng::new(2024);
    let proj = RandomProjection::new(3, 8, 11).unwrap();
    let x = DMatrix::from_fn(200, 3, |_, _| rng.uniform(-1.0, 1.0));
    let y = DMatrix::from_fn(200, 2, |r, c| {
        let s: f64 = x.row(r).iter().sum();
        if c == 0 {
            s.sin()
        } else {
            (x[(r, 0)] * x[(r, 2)]).cos()
        }
    });
    let h = build_hidden_matrix(&proj, &x).unwrap();
    let batch = ridge_solve(
        &DesignMatrices::new(h.clone(), y.clone()).unwrap(),
        DEFAULT_LAMBDA,
    )
    .unwrap()
    .into_matrix();

    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let n0 = 1 + rng.index(199);
        let mut s = init_online(
            &h.rows(0, n0).into_owned(),
            &y.rows(0, n0).into_owned(),
            DEFAULT_LAMBDA,
        )
        .unwrap();
        let mut at = n0;
        while at < 200 {
            let k = (1 + rng.index(20)).min(200 - at);
            s.update(&h.rows(at, k).into_owned(), &y.rows(at, k).into_owned())
                .unwrap();
            at += k;
        }
        worst = worst.max(rel(s.weights().as_matrix(), &batch));
    }
    outcome(
        worst < 1e-8,
        format!("worst relative difference {worst:.3e} (tol 1e-8)"),
    )
}

/// Truth plant with exact ELM dynamics, driven by a multilevel input.
struct SyntheticCase {
    plant: SyntheticElmPlant,
    estimator: LyapunovEstimator,
    w_star: DMatrix<f64>,
    inputs: Vec<f64>,
    z0: DVector<f64>,
    z_hat0: DVector<f64>,
}

fn synthetic_case(seed: u64, xi: f64, gain: f64, duration: f64, dt: f64) -> SyntheticCase {
    let a = DesignMatrix::diagonal(&[-50.0, -50.0]).unwrap();
    let proj = RandomProjection::new(3, 8, DetRng::stream(seed, 1).next_u64()).unwrap();
    let mut rng = DetRng::stream(seed, 4);
    let w_star = DMatrix::from_fn(8, 2, |_, _| rng.uniform(-10.0, 10.0));
    let mut plant = SyntheticElmPlant::new(
        a.as_matrix().clone(),
        proj.clone(),
        OutputWeights::new(w_star.clone()).unwrap(),
        1,
    )
    .unwrap();
    if xi > 0.0 {
        plant = plant.with_disturbance(xi, 5.0);
    }
    let inputs = prms_generate(&PrmsConfig::new(
        DetRng::stream(seed, 2).next_u64(),
        duration,
        dt,
    ))
    .unwrap();
    let z0 = DVector::from_vec(vec![0.2, -0.3]);
    let z_hat0 = DVector::from_vec(vec![-0.4, 0.5]);
    let estimator = LyapunovEstimator::new(a, proj, OutputWeights::zeros(8, 2), z_hat0.clone())
        .unwrap()
        .with_gain(gain)
        .unwrap();
    SyntheticCase {
        plant,
        estimator,
        w_star,
        inputs,
        z0,
        z_hat0,
    }
}

type Joint = ((DVector<f64>, DVector<f64>), DMatrix<f64>);

/// Integrates plant and estimator as one ODE; calls `visit(t, z, z_hat, w_hat)`
/// at every grid point.
fn simulate_joint(c: &SyntheticCase, dt: f64, mut visit: impl FnMut(f64, &Joint)) {
    let mut s: Joint = ((c.z0.clone(), c.z_hat0.clone()), DMatrix::zeros(8, 2));
    for (k, &u) in c.inputs.iter().enumerate() {
        let t = k as f64 * dt;
        visit(t, &s);
        let u = DVector::from_element(1, u);
        let f = |t: f64, s: &Joint| {
            let ((z, z_hat), w_hat) = s;
            let phi = c
                .estimator
                .projection()
                .hidden_output(&SyntheticElmPlant::model_input(&u, z))
                .unwrap();
            let (dz_hat, dw) = c.estimator.vector_field(z_hat, w_hat, z, &phi);
            ((c.plant.derivative(z, &u, t), dz_hat), dw)
        };
        s = rk4(f, t, &s, dt);
    }
    visit(c.inputs.len() as f64 * dt, &s);
}

fn lyapunov_descent() -> Outcome {
    let dt = 1e-3;
    let duration = 200.0;
    let mut worst_rise: f64 = 0.0;
    let mut worst_final: f64 = 0.0;
    for seed in 1..=10 {
        let c = synthetic_case(seed, 0.0, 1.0, duration, dt);
        let mut prev = f64::INFINITY;
        let mut last_e = f64::NAN;
        simulate_joint(&c, dt, |_, ((z, z_hat), w_hat)| {
            let e = z - z_hat;
            let v = lyapunov_value(&e, &(&c.w_star - w_hat));
            if prev.is_finite() {
                worst_rise = worst_rise.max((v - prev) / prev);
            }
            prev = v;
            last_e = e.norm();
        });
        worst_final = worst_final.max(last_e);
    }
    outcome(
        worst_rise <= 1e-6 && worst_final < 1e-3,
        format!(
            "largest relative V increase {worst_rise:.3e} (tol 1e-6), worst final |e| {worst_final:.3e} (tol 1e-3)"
        ),
    )
}

/// Fraction of post-transient samples with `||e|| > Gamma`, and Gamma.
fn gamma_exceedance(gain: f64) -> (f64, f64) {
    let dt = 1e-3;
    let duration = 40.0;
    let xi = 0.5;
    let mut exceed = 0usize;
    let mut total = 0usize;
    let mut bound = 0.0;
    for seed in 1..=5 {
        let c = synthetic_case(seed, xi, gain, duration, dt);
        bound = stability_threshold(c.estimator.design_matrix(), xi)
            .unwrap()
            .gamma;
        simulate_joint(&c, dt, |t, ((z, z_hat), _)| {
            if t >= duration / 2.0 {
                total += 1;
                if (z - z_hat).norm() > bound {
                    exceed += 1;
                }
            }
        });
    }
    (exceed as f64 / total as f64, bound)
}

fn gamma_consistency() -> Outcome {
    // Run at the harness gain; unit gain is reported for reference only,
    // its weight transient outlasts the horizon.
    let (frac, bound) = gamma_exceedance(BENCHMARK_ADAPTATION_GAIN);
    let (unit, _) = gamma_exceedance(1.0);
    outcome(
        frac < 0.05,
        format!(
            "{:.3}% of post-transient samples above Gamma = {bound} at gain {BENCHMARK_ADAPTATION_GAIN:e} (limit 5%); unit gain: {:.2}%",
            100.0 * frac,
            100.0 * unit
        ),
    )
}

fn rk4_order() -> Outcome {
    let err = |steps: usize| {
        let dt = 1.0 / steps as f64;
        let mut x = DVector::from_element(1, 1.0);
        for k in 0..steps {
            x = rk4(|_, x: &DVector<f64>| -x, k as f64 * dt, &x, dt);
        }
        (x[0] - (-1.0f64).exp()).abs()
    };
    let ratio = err(10) / err(40);
    outcome(
        ratio >= 200.0,
        format!("error ratio {ratio:.1} for a 4x smaller step (need >= 200)"),
    )
}

fn table_ordering(t: &PaperTables, plant: PlantKind, soft_target: Option<f64>) -> Outcome {
    let n = PAPER_SEEDS.count();
    let mut pass = true;
    let mut parts = Vec::new();
    for case in CaseKind::ALL {
        let wins = t.wins(plant, case, Method::LyapunovElm, Method::OnlineElm);
        let (lm, _, _) = t.stats(plant, case, Method::LyapunovElm);
        let (om, _, _) = t.stats(plant, case, Method::OnlineElm);
        pass &= wins * 10 >= 9 * n;
        parts.push(format!(
            "{}: lyapunov wins {wins}/{n} (mean {lm:.4} vs {om:.4})",
            case.as_str()
        ));
        if let Some(target) = soft_target {
            pass &= lm < target;
        }
    }
    if plant == PlantKind::Lorentz {
        let (clean, _, _) = t.stats(plant, CaseKind::Clean, Method::LyapunovElm);
        let (noisy, _, _) = t.stats(plant, CaseKind::Noisy, Method::LyapunovElm);
        pass &= noisy >= clean;
        parts.push(format!(
            "lyapunov noisy {noisy:.5} >= clean {clean:.5}: {}",
            noisy >= clean
        ));
    }
    outcome(pass, parts.join("; "))
}

fn determinism(first: &std::path::Path) -> Outcome {
    let second = tempfile::tempdir().unwrap();
    reproduce_paper_tables(Some(second.path())).unwrap();
    let mut diffs = Vec::new();
    for name in ["runs.csv", "tables.csv", "tables.txt"] {
        let a = std::fs::read(first.join(name)).unwrap();
        let b = std::fs::read(second.path().join(name)).unwrap();
        if a != b {
            diffs.push(name);
        }
    }
    outcome(
        diffs.is_empty(),
        if diffs.is_empty() {
            "two runs produced identical runs.csv, tables.csv and tables.txt".to_string()
        } else {
            format!("differing outputs: {diffs:?}")
        },
    )
}

fn report(id: usize, name: &str, budget: Duration, elapsed: Duration, o: Outcome) -> bool {
    let in_time = elapsed <= budget;
    let pass = o.pass && in_time;
    println!(
        "[{}] criterion {id} {name}: {} | {:.2}s (budget {}s)",
        if pass { "PASS" } else { "FAIL" },
        o.detail,
        elapsed.as_secs_f64(),
        budget.as_secs()
    );
    pass
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let start = Instant::now();
    let v = f();
    (v, start.elapsed())
}

fn main() {
    let mut passed = Vec::new();

    let (o, d) = timed(rls_batch_equivalence);
    passed.push(report(
        1,
        "RLS/batch equivalence",
        Duration::from_secs(1),
        d,
        o,
    ));

    let (o, d) = timed(lyapunov_descent);
    passed.push(report(2, "Lyapunov descent", Duration::from_secs(10), d, o));

    let out = tempfile::tempdir().unwrap();
    let (tables, d_tables) = timed(|| reproduce_paper_tables(Some(out.path())).unwrap());
    print!("{}", tables.tables_txt());
    // Both benchmark tables come from one sweep; its full runtime is charged to each.
    passed.push(report(
        3,
        "DC-motor ordering",
        Duration::from_secs(120),
        d_tables,
        table_ordering(&tables, PlantKind::DcMotor, Some(0.2)),
    ));
    passed.push(report(
        4,
        "Lorentz ordering",
        Duration::from_secs(180),
        d_tables,
        table_ordering(&tables, PlantKind::Lorentz, None),
    ));

    let (o, d) = timed(gamma_consistency);
    passed.push(report(
        5,
        "Gamma consistency",
        Duration::from_secs(10),
        d,
        o,
    ));

    let (o, d) = timed(rk4_order);
    passed.push(report(6, "RK4 order", Duration::from_secs(1), d, o));

    let (o, d) = timed(|| determinism(out.path()));
    passed.push(report(
        7,
        "determinism",
        Duration::from_secs(300),
        d + d_tables,
        o,
    ));

    let ok = passed.iter().filter(|p| **p).count();
    println!("acceptance: {ok}/{} criteria passed", passed.len());
    let strict = std::env::var("ACCEPTANCE_STRICT").is_ok_and(|v| v == "1");
    if strict && ok < passed.len() {
        std::process::exit(1);
    }
}
