use proptest::prelude::*;

use volpost::likelihood::LikelihoodContext;
use volpost::posterior::{adjust, conjugate_from_stats, equal_tail_interval, hpd_interval, point_estimates, PriorSpec};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn shifting_translates_every_summary(
        n in 50usize..5000,
        theta in 0.05f64..5.0,
        kappa in 0.2f64..5.0,
        delta in -0.5f64..0.5,
    ) {
        let dt = 1.0 / n as f64;
        let prior = PriorSpec::InverseGamma { shape: 1.0, scale: 1.0 };
        let post = conjugate_from_stats(&prior, n, theta * n as f64 * dt, dt, kappa).unwrap();
        let moved = adjust(&post, delta);
        for (a, b) in [
            (hpd_interval(&post, 0.95).unwrap(), hpd_interval(&moved, 0.95).unwrap()),
            (equal_tail_interval(&post, 0.95).unwrap(), equal_tail_interval(&moved, 0.95).unwrap()),
        ] {
            let tol = 1e-9 * (1.0 + a.upper.abs());
            prop_assert!((b.lower - (a.lower - delta)).abs() < tol);
            prop_assert!((b.upper - (a.upper - delta)).abs() < tol);
        }
        let (p, q) = (point_estimates(&post), point_estimates(&moved));
        prop_assert!((q.mean - (p.mean - delta)).abs() < 1e-9 * (1.0 + p.mean.abs()));
        prop_assert!((q.map - (p.map - delta)).abs() < 1e-9 * (1.0 + p.map.abs()));
    }

    #[test]
    fn scaling_the_data_scales_the_mle(
        dy in proptest::collection::vec(-1.0f64..1.0, 2..400),
        s in 0.1f64..10.0,
    ) {
        prop_assume!(dy.iter().any(|v| v.abs() > 1e-3));
        let dt = 1.0 / dy.len() as f64;
        let a = LikelihoodContext::new(&dy, dt, 0.0, None).unwrap().mle().unwrap().theta;
        let scaled: Vec<f64> = dy.iter().map(|v| v * s).collect();
        let b = LikelihoodContext::new(&scaled, dt, 0.0, None).unwrap().mle().unwrap().theta;
        prop_assert!((b / (a * s * s) - 1.0).abs() < 1e-12);
    }
}
