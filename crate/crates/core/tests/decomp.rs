mod common;

use common::all_specs;
use exitlab::decomp::*;
use exitlab::levy::{ModelParams, SubordinatorSpec};
use exitlab::mc::stream_rng;
use exitlab::specfun::{erfc, norm_cdf};
use proptest::prelude::*;
use rand::Rng;
use rand_distr::StandardNormal;

const DRAWS: usize = 4_000_000;

/// Fraction of `DRAWS` trials for which `hit` holds, with its standard error.
fn mc(seed: u64, mut hit: impl FnMut(&mut rand_chacha::ChaCha8Rng) -> bool) -> (f64, f64) {
    let mut rng = stream_rng(seed, 0);
    let n = (0..DRAWS).filter(|_| hit(&mut rng)).count() as f64;
    let p = n / DRAWS as f64;
    (p, (p * (1.0 - p) / DRAWS as f64).sqrt())
}

fn normal(rng: &mut rand_chacha::ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

#[test]
fn p1_orthant_value() {
    let v = p1_basic(0.0, 1.0, 1.0, 0.0).unwrap();
    let want = 0.25 + (0.5f64).sqrt().asin() / (2.0 * std::f64::consts::PI);
    assert!((v - want).abs() < 1e-10, "{v}");
    assert!((want - 0.375).abs() < 1e-15);
}

#[test]
fn p1_basic_matches_mc() {
    let (eps, t, al, a): (f64, f64, f64, f64) = (0.4, 1.3, 0.7, 0.5);
    let (p, se) = mc(1, |r| {
        let w = t.sqrt() * normal(r);
        w >= a && w + al.sqrt() * normal(r) >= a - eps
    });
    let v = p1_basic(eps, t, al, a).unwrap();
    assert!((v - p).abs() <= 4.0 * se, "{v} vs {p} ± {se}");
}

#[test]
fn p1_general_matches_mc() {
    let model = ModelParams { mu: -1.0, sigma: 1.0, ..Default::default() };
    let (eps, t1, t2, a) = (0.0, 1.0, 1.0, 1.0);
    // the events as printed: W_{t1} <= u1 and W_{t1} + W' <= u2
    let u1 = (-a - model.mu * t1) / model.sigma;
    let u2 = (-a - eps) / model.sigma - model.mu * (t1 + t2) / (2.0 * model.sigma);
    let (p, se) = mc(2, |r| {
        let w = t1.sqrt() * normal(r);
        w <= u1 && w + t2.sqrt() * normal(r) <= u2
    });
    let v = p1_general(eps, t1, t2, a, &model).unwrap();
    assert!((v - p).abs() <= 4.0 * se, "{v} vs {p} ± {se}");
}

#[test]
fn p2_basic_gamma_stationary_matches_mc() {
    let spec = SubordinatorSpec::GammaStationary { nu: 1.0, alpha: 1.0 };
    let (p, se) = mc(3, |r| {
        let y = spec.sample_increment(1.0, r);
        y >= 1.0 && y + spec.sample_increment(1.0, r) >= 1.0
    });
    let v = p2_basic(0.0, 1.0, 1.0, 1.0, &spec).unwrap();
    assert!((v - p).abs() <= 4.0 * se, "{v} vs {p} ± {se}");
}

#[test]
fn p2_general_gamma_bdlp_matches_mc() {
    let spec = SubordinatorSpec::GammaBdlp { nu: 1.0, alpha: 1.0 };
    let (t1, t2, b) = (1.0, 1.0, 1.0);
    // the first case is degenerate (both limits negative); the second puts them at 1 and 1.5
    for (seed, mu, eps) in [(4, 0.0, 0.0), (5, 2.0, -0.5)] {
        let model = ModelParams { mu, rho: -1.0, ..Default::default() };
        let c1 = (b - mu * t2) / model.rho;
        let c2 = (b + eps) / model.rho - mu * (t1 + t2) / (2.0 * model.rho);
        let (p, se) = mc(seed, |r| {
            let z = spec.sample_increment(t2, r);
            z >= c1 && z + spec.sample_increment(t1, r) >= c2
        });
        let v = p2_general(eps, t1, t2, b, &model, &spec).unwrap();
        assert!((v - p).abs() <= 4.0 * se.max(1e-12), "mu = {mu}: {v} vs {p} ± {se}");
    }
}

#[test]
fn limit_identities() {
    // eps pushed 12 standard deviations out
    for (t, al, a) in [(1.0f64, 1.0f64, 0.5f64), (0.3, 2.0, 1.5), (2.0, 0.5, 0.1)] {
        let far = 12.0 * al.sqrt();
        let v = p1_basic(far + a, t, al, a).unwrap();
        assert!((v - 0.5 * erfc(a / (2.0 * t).sqrt())).abs() < 1e-6);
        let model = ModelParams { mu: -0.7, sigma: 1.3, ..Default::default() };
        let v = p1_general(-(far * model.sigma + 10.0), t, al, a, &model).unwrap();
        let want = norm_cdf((-a - model.mu * t) / model.sigma / t.sqrt());
        assert!((v - want).abs() < 1e-6, "{v} vs {want}");
    }
    for spec in all_specs() {
        let (t, al, b) = (0.8, 1.2, 0.7);
        let sd = (spec.variance() * t).sqrt();
        let v = p2_basic(-(b + spec.mean() * t + 12.0 * sd), t, al, b, &spec).unwrap();
        let want = Marginal::new(&spec, al).unwrap().survival(b);
        assert!((v - want).abs() < 1e-6, "{spec}: {v} vs {want}");
        assert!((p2_basic(0.0, t, al, 0.0, &spec).unwrap() - 1.0).abs() < 1e-6, "{spec}");
    }
}

#[test]
fn decomposition_monotone_in_barriers() {
    let spec = SubordinatorSpec::GammaBdlp { nu: 1.0, alpha: 1.0 };
    let run = |a: f64, b: f64| {
        let input = DecompositionInput { time_box: 2.0, epsilon_window: 6.0, ..DecompositionInput::basic(a, b, spec) };
        decomposition_probability(&input).unwrap().value
    };
    let base = run(0.5, 0.5);
    let (wider_a, wider_b) = (run(1.0, 0.5), run(0.5, 1.0));
    assert!(wider_a <= base && wider_b <= base, "{base} {wider_a} {wider_b}");
}

#[test]
fn invalid_inputs_name_the_key() {
    let mut input = DecompositionInput::basic(1.0, 1.0, all_specs()[1]);
    input.time_box = 0.0;
    assert!(matches!(decomposition_probability(&input), Err(exitlab::Error::InvalidParameter { key, .. }) if key == "time-box"));
    let input = DecompositionInput::general(1.0, 1.0, ModelParams { rho: 0.5, ..Default::default() }, all_specs()[1]);
    assert!(matches!(decomposition_probability(&input), Err(exitlab::Error::InvalidParameter { key, .. }) if key == "rho"));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn p1_is_probability_and_monotone(eps in -5.0f64..5.0, t in 0.01f64..5.0, al in 0.01f64..5.0, a in 0.0f64..3.0, da in 0.0f64..2.0) {
        let v = p1_basic(eps, t, al, a).unwrap();
        prop_assert!((0.0..=1.0).contains(&v));
        prop_assert!(p1_basic(eps, t, al, a + da).unwrap() <= v + 1e-12);
    }

    #[test]
    fn p1_general_reflects_basic(eps in -4.0f64..4.0, t in 0.05f64..4.0, al in 0.05f64..4.0, a in 0.0f64..3.0) {
        let model = ModelParams { mu: 0.0, sigma: 1.0, ..Default::default() };
        let g = p1_general(eps, t, al, a, &model).unwrap();
        let b = p1_basic(-eps, t, al, a).unwrap();
        prop_assert!((g - b).abs() < 1e-10, "{} vs {}", g, b);
    }

    #[test]
    fn p2_is_probability(idx in 0usize..6, eps in -4.0f64..4.0, t in 0.05f64..4.0, al in 0.05f64..4.0, b in 0.0f64..3.0) {
        let v = p2_basic(eps, t, al, b, &all_specs()[idx]).unwrap();
        prop_assert!((0.0..=1.0).contains(&v));
    }

    #[test]
    fn p2_rho_scaling(eps in -3.0f64..3.0, c in 0.2f64..5.0, b in 0.05f64..2.0) {
        let spec = SubordinatorSpec::IgBdlp { delta: 1.0, gamma: 1.0 };
        let m1 = ModelParams { rho: -1.0, ..Default::default() };
        let mc = ModelParams { rho: -c, ..Default::default() };
        let v1 = p2_general(eps, 0.9, 1.4, b, &m1, &spec).unwrap();
        let vc = p2_general(c * eps, 0.9, 1.4, c * b, &mc, &spec).unwrap();
        prop_assert!((v1 - vc).abs() < 1e-9, "{} vs {}", v1, vc);
    }
}
