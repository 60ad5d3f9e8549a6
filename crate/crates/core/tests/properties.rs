mod common;

use proptest::prelude::*;
use qosprov::capacity::{capacity_upper_bound, effective_capacity};
use qosprov::channel::{derive_chain, discretize, ChannelSpec};
use qosprov::matching::max_arrival;
use qosprov::qos::{delay_violation, DelayModel};
use qosprov::source::{effective_bandwidth, mean_rate, SourceModel};
use qosprov::QosExponent;

fn c_e(gamma: f64, rate: f64, kappa: f64, theta: f64) -> f64 {
    effective_capacity(&ChannelSpec::new(gamma, rate, kappa).unwrap(), QosExponent::new(theta).unwrap())
        .unwrap()
        .value
}

fn log_range(lo: f64, hi: f64) -> impl Strategy<Value = f64> {
    (lo.ln()..hi.ln()).prop_map(f64::exp)
}

fn source() -> impl Strategy<Value = SourceModel> {
    let lambda = 0.01f64..10.0;
    prop_oneof![
        (0.01f64..0.99, 0.01f64..0.99, lambda.clone())
            .prop_map(|(p11, p22, lambda_on)| SourceModel::Dtms { p11, p22, lambda_on }),
        (log_range(0.01, 100.0), log_range(0.01, 100.0), lambda.clone())
            .prop_map(|(alpha, beta, lambda_on)| SourceModel::Mfs { alpha, beta, lambda_on }),
        (log_range(0.01, 100.0), log_range(0.01, 100.0), lambda)
            .prop_map(|(alpha, beta, lambda_on)| SourceModel::Mmps { alpha, beta, lambda_on }),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn capacity_between_zero_and_mean_service(
        gamma in log_range(1e-2, 1e4), rate in 0.0f64..20.0, kappa in log_range(1e-6, 1e6), theta in log_range(1e-8, 1e3),
    ) {
        let spec = ChannelSpec::new(gamma, rate, kappa).unwrap();
        let c = effective_capacity(&spec, QosExponent::new(theta).unwrap()).unwrap().value;
        let ub = capacity_upper_bound(&spec).unwrap();
        prop_assert!(c.is_finite());
        prop_assert!(c >= 0.0 && c <= ub * (1.0 + 1e-12), "{c} vs {ub}");
    }

    #[test]
    fn capacity_monotone_in_kappa_gamma_and_theta(
        gamma in log_range(0.1, 1e3), rate in 0.1f64..8.0, kappa in log_range(1e-3, 1e4), theta in log_range(1e-4, 1e2),
        f in 1.01f64..10.0,
    ) {
        let base = c_e(gamma, rate, kappa, theta);
        let tol = 1e-12 * base.max(1e-300);
        prop_assert!(c_e(gamma, rate, kappa * f, theta) >= base - tol);
        prop_assert!(c_e(gamma * f, rate, kappa, theta) >= base - tol);
        prop_assert!(c_e(gamma, rate, kappa, theta * f) <= base + tol);
    }

    #[test]
    fn capacity_is_unimodal_in_rate(gamma in log_range(0.1, 1e4), kappa in log_range(1e-2, 1e4), theta in log_range(1e-3, 1e2)) {
        let hi = qosprov::optimizer::rate_search_limit(gamma);
        let v: Vec<f64> = (0..=400).map(|i| c_e(gamma, hi * i as f64 / 400.0, kappa, theta)).collect();
        let k = (0..v.len()).max_by(|&a, &b| v[a].total_cmp(&v[b])).unwrap();
        let tol = 1e-12 * v[k];
        prop_assert!(v[..=k].windows(2).all(|w| w[1] >= w[0] - tol));
        prop_assert!(v[k..].windows(2).all(|w| w[1] <= w[0] + tol));
    }

    #[test]
    fn kernel_is_a_semigroup(
        gamma in log_range(0.5, 100.0), rate in 0.1f64..6.0, kappa in log_range(1e-3, 100.0),
        s in log_range(1e-3, 10.0), t in log_range(1e-3, 10.0),
    ) {
        let chain = derive_chain(&ChannelSpec::new(gamma, rate, kappa).unwrap()).unwrap();
        let a = discretize(&chain, s).unwrap();
        let b = discretize(&chain, t).unwrap();
        let ab = discretize(&chain, s + t).unwrap();
        let composed = a.compose(&b);
        for i in 0..2 {
            prop_assert!((a.p[i][0] + a.p[i][1] - 1.0).abs() < 1e-12);
            for j in 0..2 {
                prop_assert!((composed.p[i][j] - ab.p[i][j]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn bandwidth_between_mean_and_peak_and_increasing(src in source(), theta in log_range(1e-4, 10.0), f in 1.01f64..5.0) {
        let th = QosExponent::new(theta).unwrap();
        let a = effective_bandwidth(&src, th).unwrap();
        let mean = mean_rate(&src).unwrap();
        prop_assert!(a >= mean * (1.0 - 1e-9), "{a} < mean {mean}");
        if !matches!(src, SourceModel::Mmps { .. }) {
            // Poisson arrivals have no finite peak
            prop_assert!(a <= src.lambda_on() * (1.0 + 1e-9));
        }
        let b = effective_bandwidth(&src, QosExponent::new(theta * f).unwrap()).unwrap();
        prop_assert!(b >= a * (1.0 - 1e-9));
    }

    #[test]
    fn matched_rate_meets_capacity(src in source(), c in log_range(1e-3, 10.0), theta in log_range(1e-3, 5.0)) {
        let th = QosExponent::new(theta).unwrap();
        let m = max_arrival(&src, c, th).unwrap();
        let a = effective_bandwidth(&src.with_lambda(m.lambda_on_star), th).unwrap();
        prop_assert!((a - c).abs() <= 1e-8 * c.max(1.0), "a={a} c={c}");
    }

    #[test]
    fn violation_decreases_with_delay_and_exponent(
        zeta in 0.0f64..=1.0, theta in log_range(1e-3, 10.0), bw in 0.0f64..5.0, d in 0.0f64..50.0, dd in 0.0f64..10.0,
    ) {
        let m = DelayModel::new(zeta, QosExponent::new(theta).unwrap(), bw).unwrap();
        let p = delay_violation(&m, d).unwrap();
        prop_assert!((0.0..=1.0).contains(&p));
        prop_assert!(delay_violation(&m, d + dd).unwrap() <= p);
        let tighter = DelayModel::new(zeta, QosExponent::new(theta * 2.0).unwrap(), bw).unwrap();
        prop_assert!(delay_violation(&tighter, d).unwrap() <= p);
    }
}

#[test]
fn no_negative_capacity_on_a_wide_sweep() {
    let mut r = common::rng(11);
    for _ in 0..10_000 {
        let gamma = common::log_uniform(&mut r, 1e-2, 1e5);
        let rate = common::uniform(&mut r, 0.0, 30.0);
        let kappa = common::log_uniform(&mut r, 1e-9, 1e9);
        let theta = common::log_uniform(&mut r, 1e-8, 1e4);
        let c = c_e(gamma, rate, kappa, theta);
        assert!(c.is_finite() && c >= 0.0, "gamma={gamma} R={rate} kappa={kappa} theta={theta}: {c}");
    }
}
