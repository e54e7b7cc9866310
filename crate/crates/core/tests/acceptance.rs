//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs without the libtest harness so that every criterion reports even when
//! an earlier one fails. Criteria listed in `KNOWN_FAILURES` are still run and
//! still print FAIL; only an unexpected failure makes the process exit non-zero.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::time::{Duration, Instant};

use common::{all_specs, corpus, logspace, rel_err, BESSEL, ERF, ERFC, GAMMA_UPPER, HYP2F1};
use exitlab::decomp::*;
use exitlab::empirical::*;
use exitlab::firstexit::*;
use exitlab::laplace::{invert_at, Method};
use exitlab::levy::{bdlp_from_stationary, ModelParams, SubordinatorSpec};
use exitlab::mc::*;
use exitlab::quad::{integrate, integrate_to_inf};
use exitlab::specfun::*;
use exitlab::{Grid, QuadSettings};

/// Criteria whose stated tolerance the method cannot reach; see the README.
const KNOWN_FAILURES: &[&str] = &["2b"];

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn within(budget: Duration, start: Instant, out: Outcome) -> Outcome {
    let took = start.elapsed();
    let stamp = |d: String| format!("{d}; {:.1} s of {} s", took.as_secs_f64(), budget.as_secs());
    match out {
        Ok(d) if took <= budget => Ok(stamp(d)),
        Ok(d) => Err(stamp(format!("{d}; over time budget"))),
        Err(d) => Err(stamp(d)),
    }
}

fn secs(s: u64) -> Duration {
    Duration::from_secs(s)
}

// ---------------------------------------------------------------------------

fn c1_specfun() -> Outcome {
    let mut worst: f64 = 0.0;
    for &(x, want) in ERF {
        worst = worst.max(rel_err(erf(x), want));
    }
    for &(x, want) in ERFC {
        worst = worst.max(rel_err(erfc(x), want));
    }
    for &(a, x, want) in GAMMA_UPPER {
        worst = worst.max(rel_err(gamma_upper(a, x).map_err(|e| e.to_string())?, want));
    }
    for &(x, i0, i1) in BESSEL {
        worst = worst.max(rel_err(bessel_i0(x).map_err(|e| e.to_string())?, i0));
        worst = worst.max(rel_err(bessel_i0_prime(x).map_err(|e| e.to_string())?, i1));
    }
    for &(n, c, x, want) in HYP2F1 {
        worst = worst.max(rel_err(hyp2f1_terminating(n, c, x).map_err(|e| e.to_string())?, want));
    }
    let v = |u: &[f64], l: &[f64], x: f64| pfq(&PfqParams::real(u, l, x), 2000, 1e-16).map(|s| s.value.re).unwrap_or(f64::NAN);
    let x = 0.8f64;
    for (got, want) in [
        (v(&[], &[], -2.5), (-2.5f64).exp()),
        (v(&[2.0], &[], 0.3), 0.7f64.powi(-2)),
        (v(&[1.0, 1.0], &[2.0], -0.5), 1.5f64.ln() / 0.5),
        (v(&[1.0], &[2.0], 1.7), (1.7f64.exp() - 1.0) / 1.7),
        (v(&[0.5], &[1.5], -x * x), std::f64::consts::PI.sqrt() * erf(x) / (2.0 * x)),
    ] {
        worst = worst.max(rel_err(got, want));
    }
    check(worst <= 1e-12, format!("max relative error {worst:.1e}"))
}

fn corpus_worst(method: Method, order: usize) -> (f64, &'static str) {
    let mut worst = (0.0, "");
    for p in corpus() {
        for t in logspace(0.1, 10.0, 41) {
            let e = invert_at(&p.transform, method, order, t).map(|v| rel_err(v, (p.inverse)(t))).unwrap_or(f64::INFINITY);
            if e > worst.0 {
                worst = (e, p.name);
            }
        }
    }
    worst
}

fn c2a_talbot() -> Outcome {
    let (e, name) = corpus_worst(Method::Talbot, 32);
    check(e <= 1e-10, format!("Talbot-32 max relative error {e:.1e} ({name})"))
}

fn c2b_gaver_stehfest() -> Outcome {
    let (e, name) = corpus_worst(Method::GaverStehfest, 14);
    check(e <= 1e-8, format!("GS-14 max relative error {e:.1e} ({name})"))
}

fn c3_closure() -> Outcome {
    let mut worst: f64 = 0.0;
    for spec in all_specs().into_iter().filter(|s| !s.is_bdlp()) {
        let w = bdlp_from_stationary(|x| spec.stationary_density_and_derivative(x).unwrap());
        for x in logspace(1e-3, 1e2, 100) {
            let want = spec.bdlp().levy_density(x).map_err(|e| e.to_string())?;
            if want > 1e-290 {
                worst = worst.max(rel_err(w(x), want));
            }
        }
    }
    check(worst <= 1e-12, format!("max relative error {worst:.1e}"))
}

fn c4_tail_transform() -> Outcome {
    let settings = QuadSettings::new(1e-13, 1e-12).with_panels(2000);
    let mut worst: f64 = 0.0;
    for spec in all_specs() {
        for s in [0.5, 1.0, 2.0, 5.0] {
            let f = |t: f64| if t > 0.0 { spec.integrated_tail(t).unwrap_or(f64::NAN) * (-s * t).exp() } else { 0.0 };
            let head = integrate(f, 0.0, 1.0, &settings).map_err(|e| e.to_string())?.value;
            let tail = integrate_to_inf(f, 1.0, &settings).map_err(|e| e.to_string())?.value;
            worst = worst.max(rel_err(s * (head + tail), spec.psi_real(s)));
        }
    }
    check(worst <= 1e-8, format!("max relative error {worst:.1e}"))
}

fn c5_gamma_bdlp_closed() -> Outcome {
    let spec = SubordinatorSpec::GammaBdlp { nu: 1.0, alpha: 1.0 };
    let grid = Grid::new(0.1, 0.0049, 1001).map_err(|e| e.to_string())?;
    let mut worst: f64 = 0.0;
    for t in [0.5, 1.0, 2.0] {
        let closed = exit_density_closed(&spec, t, grid, &ClosedOptions::default()).map_err(|e| e.to_string())?;
        let numeric = exit_density_numeric(&spec, t, grid, Method::Talbot, 32).map_err(|e| e.to_string())?;
        for (c, n) in closed.values.iter().zip(&numeric.values) {
            worst = worst.max(rel_err(*c, *n));
        }
    }
    check(worst <= 1e-7, format!("max relative error {worst:.1e} over 1001 x by 3 levels"))
}

const PATHS: usize = 100_000;

fn bdlp_ks(spec: &SubordinatorSpec, seed: u64) -> Result<f64, String> {
    let level = 1.0;
    let horizon = adequate_horizon(spec, level, 1e-6).map_err(|e| e.to_string())?;
    let batch = Batch { paths: PATHS, dt: 1e-3, horizon, seed };
    let emp = subordinator_exit_batch(spec, level, &batch).map_err(|e| e.to_string())?;
    Ok(emp.ks_distance(horizon, |x| exit_cdf_numeric(spec, level, x, Method::Talbot, 32).unwrap_or(f64::NAN)))
}

fn c6_mc_concordance() -> Outcome {
    let specs = [
        SubordinatorSpec::GammaBdlp { nu: 1.0, alpha: 1.0 },
        SubordinatorSpec::IgBdlp { delta: 1.0, gamma: 1.0 },
        SubordinatorSpec::PtsBdlp { beta: 1.0, gamma: 0.5, k: 1.0 },
    ];
    let mut parts = Vec::new();
    let mut worst: f64 = 0.0;
    for (i, spec) in specs.iter().enumerate() {
        let ks = bdlp_ks(spec, 600 + i as u64)?;
        worst = worst.max(ks);
        parts.push(format!("{} {ks:.4}", spec.name()));
    }
    check(worst <= 0.02, format!("KS {}", parts.join(", ")))
}

fn brownian_ks(mu: f64, horizon: f64, seed: u64) -> Result<f64, String> {
    let model = ModelParams { mu, sigma: 1.0, rho: 0.0, ..Default::default() };
    let spec = SubordinatorSpec::GammaBdlp { nu: 1.0, alpha: 1.0 };
    let batch = Batch { paths: PATHS, dt: 1e-4, horizon, seed };
    let emp = logreturn_exit_batch(&model, &spec, 1.0, Mode::Down, &batch).map_err(|e| e.to_string())?;
    Ok(emp.ks_distance(horizon, |x| brownian_exit_cdf(1.0, mu, 1.0, x).unwrap_or(f64::NAN)))
}

fn c7_brownian() -> Outcome {
    let drift = brownian_ks(-1.0, 12.0, 700)?;
    let levy = brownian_ks(0.0, 4.0, 701)?;
    check(drift <= 0.01 && levy <= 0.01, format!("KS IG {drift:.4}, Lévy {levy:.4}"))
}

fn c8_normalization() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut curves = 0;
    let mut note = |mass: f64| {
        worst = worst.max((mass - 1.0).abs());
        curves += 1;
    };
    for spec in all_specs() {
        for t in [0.5, 1.0, 2.0] {
            let end = adequate_horizon(&spec, t, 1e-4).map_err(|e| e.to_string())?;
            let grid = Grid::from_zero(end, end / 4000.0).map_err(|e| e.to_string())?;
            note(exit_density_numeric(&spec, t, grid, Method::Talbot, 32).map_err(|e| e.to_string())?.mass());
            let coarse = Grid::from_zero(end, end / 400.0).map_err(|e| e.to_string())?;
            match exit_density_closed(&spec, t, coarse, &ClosedOptions::default()) {
                Ok(c) => note(c.mass()),
                Err(exitlab::Error::ClosedFormUnavailable(_)) => {}
                Err(e) => return Err(format!("{spec}: {e}")),
            }
        }
    }
    for (a, mu) in [(1.0, -1.0), (0.5, -2.0), (2.0, -0.5)] {
        let end = 60.0 * a / -mu;
        let grid = Grid::from_zero(end, end / 20_000.0).map_err(|e| e.to_string())?;
        note(brownian_exit_density(a, mu, 1.0, grid).map_err(|e| e.to_string())?.mass());
    }
    check(worst <= 1e-3, format!("{curves} curves, max |mass - 1| {worst:.1e}"))
}

fn decomposition_cases() -> Vec<(&'static str, DecompositionInput)> {
    let gb = SubordinatorSpec::GammaBdlp { nu: 1.0, alpha: 1.0 };
    let gs = SubordinatorSpec::GammaStationary { nu: 1.0, alpha: 1.0 };
    let ig = SubordinatorSpec::IgStationary { delta: 1.0, gamma: 1.0 };
    let m = |mu: f64| ModelParams { mu, sigma: 1.0, rho: -1.0, ..Default::default() };
    vec![
        ("basic gamma-bdlp", DecompositionInput::basic(1.0, 1.0, gb)),
        ("basic gamma-stat", DecompositionInput::basic(0.5, 1.5, gs)),
        ("basic ig-stat", DecompositionInput::basic(1.0, 0.5, ig)),
        ("general gamma-bdlp", DecompositionInput::general(1.0, 1.0, m(-0.5), gb)),
        ("general gamma-stat", DecompositionInput::general(0.5, 1.0, m(0.3), gs)),
    ]
}

fn c9_decomposition() -> Outcome {
    let mut parts = Vec::new();
    let mut ok = true;
    for (i, (name, input)) in decomposition_cases().into_iter().enumerate() {
        let q = decomposition_probability(&input).map_err(|e| format!("{name}: {e}"))?;
        let mc = mc_integration_check(&input, 4_000_000, 900 + i as u64).map_err(|e| format!("{name}: {e}"))?;
        let z = (q.value - mc.value) / mc.std_error;
        ok &= z.abs() <= 4.0;
        parts.push(format!("{name} z={z:+.2}"));
    }
    // limit identities, eps pushed 12 standard deviations out
    let mut limit: f64 = 0.0;
    let (t, al, a, b): (f64, f64, f64, f64) = (0.8, 1.2, 0.7, 0.9);
    let far = 12.0 * al.sqrt();
    limit = limit.max((p1_basic(far + a, t, al, a).map_err(|e| e.to_string())? - 0.5 * erfc(a / (2.0 * t).sqrt())).abs());
    limit = limit.max((p1_basic(0.0, 1.0, 1.0, 0.0).map_err(|e| e.to_string())? - 0.375).abs());
    let model = ModelParams { mu: -0.7, sigma: 1.3, ..Default::default() };
    let v = p1_general(-(far * model.sigma + 10.0), t, al, a, &model).map_err(|e| e.to_string())?;
    limit = limit.max((v - norm_cdf((-a - model.mu * t) / model.sigma / t.sqrt())).abs());
    for spec in all_specs() {
        let sd = (spec.variance() * t).sqrt();
        let v = p2_basic(-(b + spec.mean() * t + 12.0 * sd), t, al, b, &spec).map_err(|e| e.to_string())?;
        let want = Marginal::new(&spec, al).map_err(|e| e.to_string())?.survival(b);
        limit = limit.max((v - want).abs());
        limit = limit.max((p2_basic(0.0, t, al, 0.0, &spec).map_err(|e| e.to_string())? - 1.0).abs());
    }
    ok &= limit <= 1e-6;
    check(ok, format!("{}; limit identities {limit:.1e}", parts.join(", ")))
}

fn c10_ou() -> Outcome {
    let (nu, alpha) = (2.0, 3.0);
    let spec = SubordinatorSpec::GammaBdlp { nu, alpha };
    let model = ModelParams { lambda: 1.0, rho: -0.5, ..Default::default() };
    let n = 20_000u64;
    // far from stationarity at 0; e^{-20} of the start is left at T = 20
    let ends: Vec<f64> = (0..n)
        .map(|i| simulate_variance(&model, &spec, 0.01, 20.0, 0.05, 1000, i).map(|p| *p.values.last().unwrap()))
        .collect::<exitlab::Result<_>>()
        .map_err(|e| e.to_string())?;
    let nf = n as f64;
    let m = ends.iter().sum::<f64>() / nf;
    let v = ends.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (nf - 1.0);
    let m4 = ends.iter().map(|x| (x - m).powi(4)).sum::<f64>() / nf;
    let (zm, zv) = ((m - nu / alpha) / (v / nf).sqrt(), (v - nu / (alpha * alpha)) / ((m4 - v * v) / nf).sqrt());
    // realized variance from a stationary start
    use rand::SeedableRng;
    use rand_distr::{Distribution, Gamma};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1001);
    let law = Gamma::new(nu, 1.0 / alpha).map_err(|e| e.to_string())?;
    let rvs: Vec<f64> = (0..n)
        .map(|i| {
            let s0 = law.sample(&mut rng);
            simulate_variance(&model, &spec, s0, 5.0, 0.05, 1002, i).and_then(|p| realized_variance(&p, &model, &spec, 5.0))
        })
        .collect::<exitlab::Result<_>>()
        .map_err(|e| e.to_string())?;
    let rm = rvs.iter().sum::<f64>() / nf;
    let rsd = (rvs.iter().map(|x| (x - rm) * (x - rm)).sum::<f64>() / (nf - 1.0)).sqrt();
    let want = nu / alpha + model.rho * model.rho * model.lambda * 2.0 * nu / (alpha * alpha);
    let zr = (rm - want) / (rsd / nf.sqrt());
    check(
        zm.abs() <= 4.0 && zv.abs() <= 4.0 && zr.abs() <= 4.0,
        format!("mean z={zm:+.2}, variance z={zv:+.2}, realized variance z={zr:+.2}"),
    )
}

fn fixtures() -> &'static Path {
    Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures"))
}

fn c11_index_statistics() -> Outcome {
    if let Ok(path) = std::env::var("EXITLAB_SP500_CSV") {
        let series = load_prices(Path::new(&path)).map_err(|e| e.to_string())?;
        let s = summary_stats(&series);
        let dev = [(s.mean, 2027.003), (s.median, 2036.709), (s.max, 3386.149), (s.min, 1022.580)]
            .iter()
            .map(|(got, want)| (got - want).abs())
            .fold(0.0, f64::max);
        return check(
            dev <= 0.001,
            format!("licensed data: mean {:.3}, median {:.3}, max {:.3}, min {:.3}", s.mean, s.median, s.max, s.min),
        );
    }
    let series = load_prices(&fixtures().join("synthetic_prices.csv")).map_err(|e| e.to_string())?;
    let cfg = PipelineConfig { thresholds: vec![0.05, 0.1], mode: Mode::Up, stride: 5, gamma_lambda: Some(0.05) };
    let (tables, config) = run_pipeline(&series, "synthetic_prices.csv", &cfg).map_err(|e| e.to_string())?;
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let artifacts = Artifacts { tables, ..Default::default() };
    let path = emit(&artifacts, dir.path(), Manifest::new("empirical", None, config)).map_err(|e| e.to_string())?;
    let got = std::fs::read(path).map_err(|e| e.to_string())?;
    let want = std::fs::read(fixtures().join("golden_empirical_manifest.json")).map_err(|e| e.to_string())?;
    check(got == want, "EXITLAB_SP500_CSV unset; synthetic golden manifest byte-exact".into())
}

fn c12_determinism() -> Outcome {
    let run = |threads: usize| -> Result<Vec<u64>, String> {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().map_err(|e| e.to_string())?;
        pool.install(|| {
            let mut bits = Vec::new();
            let spec = SubordinatorSpec::IgBdlp { delta: 1.0, gamma: 1.0 };
            let batch = Batch { paths: PATHS, dt: 1e-3, horizon: 30.0, seed: 1200 };
            let emp = subordinator_exit_batch(&spec, 1.0, &batch).map_err(|e| e.to_string())?;
            bits.extend(emp.exit_times.iter().map(|t| t.to_bits()));
            bits.push(emp.censored_count as u64);
            let model = ModelParams { mu: -0.5, sigma: 1.0, rho: -0.5, ..Default::default() };
            let batch = Batch { paths: 20_000, dt: 1e-3, horizon: 20.0, seed: 1201 };
            let emp = logreturn_exit_batch(&model, &spec, 1.0, Mode::Down, &batch).map_err(|e| e.to_string())?;
            bits.extend(emp.exit_times.iter().map(|t| t.to_bits()));
            let (_, input) = decomposition_cases().remove(0);
            let mc = mc_integration_check(&input, 1_000_000, 1202).map_err(|e| e.to_string())?;
            bits.push(mc.value.to_bits());
            let grid = Grid::new(0.1, 0.01, 500).map_err(|e| e.to_string())?;
            let curve = exit_density_closed(&spec, 1.0, grid, &ClosedOptions::default()).map_err(|e| e.to_string())?;
            bits.extend(curve.values.iter().map(|v| v.to_bits()));
            Ok(bits)
        })
    };
    let (one, four) = (run(1)?, run(4)?);
    let differ = one.iter().zip(&four).filter(|(a, b)| a != b).count() + one.len().abs_diff(four.len());
    check(differ == 0, format!("{} values compared across 1 and 4 threads, {differ} differ", one.len()))
}

// ---------------------------------------------------------------------------

fn main() {
    let criteria: Vec<(&str, &str, u64, fn() -> Outcome)> = vec![
        ("1", "special-function golden suite", 5, c1_specfun),
        ("2a", "Laplace corpus, Talbot-32 <= 1e-10", 10, c2a_talbot),
        ("2b", "Laplace corpus, Gaver-Stehfest-14 <= 1e-8", 10, c2b_gaver_stehfest),
        ("3", "BDLP map closure", 1, c3_closure),
        ("4", "tail transform equals psi / s", 30, c4_tail_transform),
        ("5", "gamma BDLP closed form vs inversion", 10, c5_gamma_bdlp_closed),
        ("6", "Monte Carlo exit-time concordance", 300, c6_mc_concordance),
        ("7", "Brownian exit law", 180, c7_brownian),
        ("8", "density normalization", 600, c8_normalization),
        ("9", "decomposition quadrature vs MC integration", 300, c9_decomposition),
        ("10", "OU stationarity", 120, c10_ou),
        ("11", "index statistics / golden manifest", 60, c11_index_statistics),
        ("12", "thread-count determinism", 600, c12_determinism),
    ];
    let only: Option<Vec<String>> = std::env::var("EXITLAB_ACCEPTANCE").ok().map(|s| s.split(',').map(str::to_owned).collect());
    let mut unexpected = Vec::new();
    for (id, title, budget, f) in criteria {
        if only.as_ref().is_some_and(|o| !o.iter().any(|x| x == id)) {
            continue;
        }
        let start = Instant::now();
        let out = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            let msg = p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        let out = within(secs(budget), start, out);
        let known = KNOWN_FAILURES.contains(&id);
        match &out {
            Ok(d) => println!("PASS {id:>3}  {title}: {d}{}", if known { " (listed as a known failure)" } else { "" }),
            Err(d) => {
                println!("FAIL {id:>3}  {title}: {d}{}", if known { " (known failure, see README)" } else { "" });
                if !known {
                    unexpected.push(id);
                }
            }
        }
    }
    if !unexpected.is_empty() {
        println!("unexpected failures: {}", unexpected.join(", "));
        std::process::exit(1);
    }
}
