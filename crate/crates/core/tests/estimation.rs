use volpost::estimators::{
    estimate, noise_variance_hat, phi_constants, preavg_threshold_estimator, EstimatorSettings, PreavgConfig,
};
use volpost::likelihood::LikelihoodContext;
use volpost::sim::DEFAULT_AUX_RESOLUTION;
use volpost::stats;
use volpost::{simulate_path, JumpFamily, JumpSpec, ModelSpec, ReplicationSeed};

fn gaussian(variance: f64, noise_sd: f64, n: usize, horizon: f64) -> ModelSpec {
    ModelSpec {
        drift: 0.0,
        variance,
        jump: JumpSpec::none(),
        noise_sd,
        horizon,
        n,
        aux_resolution: DEFAULT_AUX_RESOLUTION,
    }
}

#[test]
fn misspecified_mle_is_consistent_without_noise() {
    let n = 10_000;
    let p = simulate_path(&gaussian(0.3, 0.0, n, 1.0), ReplicationSeed::new(21, 0)).unwrap();
    let ctx = LikelihoodContext::new(&p.dy, p.dt, 0.0, None).unwrap();
    let theta = ctx.mle().unwrap().theta;
    let sd = 0.3 * (2.0 / n as f64).sqrt();
    assert!((theta - 0.3).abs() < 4.0 * sd, "{theta}");
}

#[test]
fn noisy_mle_is_consistent_with_the_true_noise_variance() {
    let n = 20_000;
    let sd = 0.01;
    let errs: Vec<f64> = (0..20)
        .map(|r| {
            let p = simulate_path(&gaussian(1.0, sd, n, 1.0), ReplicationSeed::new(22, r)).unwrap();
            let ctx = LikelihoodContext::new(&p.dy, p.dt, sd * sd, None).unwrap();
            ctx.mle().unwrap().theta - 1.0
        })
        .collect();
    let se = stats::sd(&errs) / (errs.len() as f64).sqrt();
    assert!(stats::mean(&errs).abs() < 3.5 * se, "mean {} se {se}", stats::mean(&errs));
}

#[test]
fn noise_variance_without_noise_is_the_small_theta_term() {
    let n = 10_000;
    let p = simulate_path(&gaussian(0.3, 0.0, n, 1.0), ReplicationSeed::new(23, 0)).unwrap();
    let got = noise_variance_hat(&p.dy);
    let want = 0.3 / (2.0 * n as f64);
    assert!((got / want - 1.0).abs() < 0.05, "{got} vs {want}");
}

/// Mean of the pre-averaged estimator over replications, with the given
/// noise variance plugged in (`None` uses the realized-variance estimate).
fn preavg_mean(theta: f64, sd: f64, plug: Option<f64>, reps: u64) -> (f64, f64) {
    let cfg = PreavgConfig::default();
    let n = 15_600;
    let values: Vec<f64> = (0..reps)
        .map(|r| {
            let p = simulate_path(&gaussian(theta, sd, n, 2.0), ReplicationSeed::new(24, r)).unwrap();
            let nv = plug.unwrap_or_else(|| noise_variance_hat(&p.dy));
            preavg_threshold_estimator(&p.dy, p.dt, &cfg, nv).unwrap().value
        })
        .collect();
    (stats::mean(&values), stats::sd(&values) / (reps as f64).sqrt())
}

#[test]
fn preaveraging_pure_noise_is_centred_at_zero() {
    let (m, se) = preavg_mean(0.0, 0.01, None, 200);
    assert!(m.abs() < 3.0 * se, "mean {m} se {se}");
}

#[test]
fn preaveraging_is_unbiased_given_the_noise_variance() {
    let (m, se) = preavg_mean(1.0, 0.01, Some(1e-4), 200);
    assert!((m - 1.0).abs() < 3.0 * se, "mean {m} se {se}");
}

#[test]
fn preaveraging_constants_are_positive_and_ordered() {
    let phi = phi_constants(&PreavgConfig::default()).unwrap();
    assert!(phi.phi12 * phi.phi12 <= phi.phi11 * phi.phi22);
    assert!((phi.g_bar - 1.0 / 12.0).abs() < 1e-12);
}

#[test]
fn temperature_is_near_one_without_jumps() {
    let p = simulate_path(&gaussian(0.3, 0.0, 5000, 1.0), ReplicationSeed::new(25, 0)).unwrap();
    let r = estimate(&p.dy, p.dt, &EstimatorSettings::no_noise(), None).unwrap();
    assert!((r.kappa - 1.0).abs() < 0.02, "{}", r.kappa);
    assert!(r.jump_qv_hat.abs() < 1e-3);
}

#[test]
fn threshold_removes_most_of_the_jump_variation() {
    let spec = ModelSpec {
        jump: JumpSpec {
            family: JumpFamily::CompoundPoisson {
                rate: 5.0,
                lo: -1.0,
                hi: 1.0,
                bernoulli_approx: false,
            },
            center: false,
        },
        ..gaussian(0.3, 0.0, 5000, 1.0)
    };
    let p = simulate_path(&spec, ReplicationSeed::new(26, 0)).unwrap();
    let r = estimate(&p.dy, p.dt, &EstimatorSettings::no_noise(), None).unwrap();
    assert!((r.theta_hat - 0.3).abs() < 0.03, "{}", r.theta_hat);
    assert!((r.jump_qv_hat - p.jump_qv).abs() < 0.1 * p.jump_qv.max(0.1));
}
