use statrs::function::erf::erf;
use timechange_core::bernstein::{BernsteinChar, LevyMeasure, OrderAtom};
use timechange_core::sampler::{
    cdf_inverse_killed, crossing_integral_mc, driftless_tail_mc, sample_increment, sample_inverse_killed,
    sample_inverse_marginal, sample_kill_time, IncrementSampler, InverseSampler, RngStream, DOMAIN_KILL,
};
use timechange_core::stats::{dkw_epsilon, empirical_cdf, ks_distance, Moments};

/// `P(Dbar_r >= level)` for the driftless 1/2-stable subordinator with
/// `E exp(-lambda D_1) = exp(-sqrt(lambda))`. Its law is Levy with scale 1/2,
/// i.e. `D_1 = 1 / (2 Z^2)`.
fn half_stable_tail(r: f64, level: f64) -> f64 {
    erf(r / (2.0 * level.sqrt()))
}

fn stable(a: f64, k: f64, beta: f64) -> BernsteinChar {
    BernsteinChar::new(a, k, LevyMeasure::stable(beta).unwrap()).unwrap()
}

fn moments(n: usize, mut draw: impl FnMut() -> f64) -> Moments {
    let mut m = Moments::default();
    for _ in 0..n {
        m.push(draw());
    }
    m
}

#[test]
fn stable_increment_laplace_transform() {
    let mu = LevyMeasure::stable(0.5).unwrap();
    let mut rng = RngStream::new(1, 0).rng();
    let m = moments(1_000_000, || (-sample_increment(&mu, 0.0, 1.0, &mut rng).unwrap()).exp());
    let exact = (-1.0f64).exp();
    assert!((m.mean - exact).abs() < 3.0 * m.stderr(), "{} vs {exact} ± {}", m.mean, m.stderr());
}

#[test]
fn stable_increments_follow_levy_law() {
    let mu = LevyMeasure::stable(0.5).unwrap();
    let mut rng = RngStream::new(2, 0).rng();
    let n = 100_000;
    let mut draws: Vec<f64> = (0..n).map(|_| sample_increment(&mu, 0.0, 0.7, &mut rng).unwrap()).collect();
    draws.sort_by(f64::total_cmp);
    let eps = dkw_epsilon(n, 0.01);
    for level in [0.01, 0.1, 0.3, 1.0, 5.0] {
        let p = 1.0 - empirical_cdf(&draws, level);
        assert!((p - half_stable_tail(0.7, level)).abs() < eps, "level {level}");
    }
}

#[test]
fn gamma_increment_mean() {
    let mu = LevyMeasure::gamma(1.0, 1.0).unwrap();
    let mut rng = RngStream::new(3, 0).rng();
    let m = moments(1_000_000, || sample_increment(&mu, 0.0, 1.0, &mut rng).unwrap());
    assert!((m.mean - 1.0).abs() < 3.0 * m.stderr());
}

#[test]
fn compound_poisson_and_mixture_laplace_transforms() {
    let mut rng = RngStream::new(4, 0).rng();
    let lambda = 0.8;
    for mu in [
        LevyMeasure::exp_jumps(2.0, 1.5).unwrap(),
        LevyMeasure::distributed_order(vec![
            OrderAtom { beta: 0.3, weight: 0.4 },
            OrderAtom { beta: 0.7, weight: 0.6 },
        ])
        .unwrap(),
    ] {
        let ds = 0.6;
        let m = moments(400_000, || (-lambda * sample_increment(&mu, 0.2, ds, &mut rng).unwrap()).exp());
        let phi = mu.laplace_exponent(lambda).unwrap() + 0.2 * lambda;
        let exact = (-ds * phi).exp();
        assert!((m.mean - exact).abs() < 3.0 * m.stderr(), "{}: {} vs {exact}", mu.family_name(), m.mean);
    }
}

#[test]
fn tabulated_increment_tracks_laplace_exponent() {
    // tabulated Gamma(1, 1) tail w(z) = E1(z)
    let points: Vec<(f64, f64)> = (0..=120)
        .map(|i| {
            let z = 1e-6 * 10f64.powf(i as f64 * 0.06);
            (z, timechange_core::special::exp_integral_e1(z).unwrap())
        })
        .collect();
    let mu = LevyMeasure::tabulated(&points).unwrap();
    let lambda = 1.0;
    let ds = 1e-3;
    let sampler = IncrementSampler::new(&mu, 0.0, ds).unwrap();
    assert!(!sampler.is_exact());
    let mut rng = RngStream::new(5, 0).rng();
    // sum of 500 increments: D_{0.5}
    let m = moments(100_000, || (-lambda * (0..500).map(|_| sampler.sample(&mut rng)).sum::<f64>()).exp());
    let exact = (-0.5 * mu.laplace_exponent(lambda).unwrap()).exp();
    assert!((m.mean - exact).abs() < 3.0 * m.stderr() + 2e-3, "{} vs {exact}", m.mean);
}

#[test]
fn kill_time_moments() {
    let mut rng = RngStream::new(6, 0).rng();
    let m = moments(1_000_000, || sample_kill_time(2.0, &mut rng).unwrap());
    assert!((m.mean - 0.5).abs() < 3.0 * m.stderr());
    let m = moments(1_000_000, || (sample_kill_time(1.0, &mut rng).unwrap() > 1.0) as u8 as f64);
    assert!((m.mean - (-1.0f64).exp()).abs() < 3.0 * m.stderr());
    assert_eq!(sample_kill_time(0.0, &mut rng).unwrap(), f64::INFINITY);
    assert!(sample_kill_time(-1.0, &mut rng).is_err());
}

#[test]
fn exact_inverse_matches_first_passage_identity() {
    let ch = stable(0.0, 0.0, 0.5);
    let mut rng = RngStream::new(7, 0).rng();
    let n = 100_000;
    let mut draws: Vec<f64> = (0..n).map(|_| sample_inverse_marginal(&ch, 1.0, 1.0, &mut rng).unwrap().tau).collect();
    draws.sort_by(f64::total_cmp);
    let eps = dkw_epsilon(n, 0.01);
    for r in [0.1, 0.3, 0.6, 1.0, 2.0, 4.0] {
        assert!((empirical_cdf(&draws, r) - half_stable_tail(r, 1.0)).abs() < eps, "r {r}");
    }
}

#[test]
fn exact_and_path_samplers_agree() {
    let ch = stable(0.0, 0.0, 0.5);
    let n = 100_000;
    let mut rng = RngStream::new(8, 0).rng();
    let exact: Vec<f64> = (0..n).map(|_| sample_inverse_marginal(&ch, 1.0, 1.0, &mut rng).unwrap().tau).collect();
    // a vanishing drift forces the path method for the same law
    let drifted = stable(0.0, 1e-12, 0.5);
    let path = InverseSampler::new(&drifted, 1e-3).unwrap();
    assert!(!path.is_exact());
    let mut rng = RngStream::new(8, 1).rng();
    let approx: Vec<f64> = (0..n).map(|_| path.sample(1.0, f64::INFINITY, &mut rng).unwrap().tau).collect();
    // two-sample 99% band plus the O(ds) overshoot, bounded by the largest
    // density of E_1 times ds
    let band = 2.0 * dkw_epsilon(n, 0.01) + 1e-3;
    assert!(ks_distance(&exact, &approx) < band);
}

#[test]
fn killing_dominates_for_huge_rate() {
    let ch = stable(1e6, 0.0, 0.5);
    let s = RngStream::new(9, 0);
    let (mut clock, mut kill) = (s.rng(), s.domain(DOMAIN_KILL).rng());
    let m = moments(100_000, || sample_inverse_killed(&ch, 1.0, 1e-3, &mut clock, &mut kill).unwrap().tau);
    assert!((m.mean - 1e-6).abs() < 3.0 * m.stderr());
}

#[test]
fn killed_fraction_matches_laplace_of_inverse() {
    let (a, t) = (0.7, 1.0);
    let ch = stable(a, 0.0, 0.5);
    let s = RngStream::new(10, 0);
    let (mut clock, mut kill) = (s.rng(), s.domain(DOMAIN_KILL).rng());
    let killed =
        moments(200_000, || sample_inverse_killed(&ch, t, 1e-3, &mut clock, &mut kill).unwrap().killed as u8 as f64);
    let free = stable(0.0, 0.0, 0.5);
    let mut rng = RngStream::new(10, 1).rng();
    let laplace = moments(200_000, || 1.0 - (-a * sample_inverse_marginal(&free, t, 1.0, &mut rng).unwrap().tau).exp());
    let se = (killed.stderr().powi(2) + laplace.stderr().powi(2)).sqrt();
    assert!((killed.mean - laplace.mean).abs() < 3.0 * se);
}

#[test]
fn killed_cdf_matches_formula() {
    let ch = stable(1.0, 0.0, 0.5);
    let s = RngStream::new(11, 0);
    let (mut clock, mut kill) = (s.rng(), s.domain(DOMAIN_KILL).rng());
    let n = 100_000;
    let mut draws: Vec<f64> =
        (0..n).map(|_| sample_inverse_killed(&ch, 1.0, 1e-3, &mut clock, &mut kill).unwrap().tau).collect();
    draws.sort_by(f64::total_cmp);
    let formula = cdf_inverse_killed(&ch, 1.0, 0.5, half_stable_tail).unwrap();
    assert!((empirical_cdf(&draws, 0.5) - formula).abs() < dkw_epsilon(n, 0.01));
    // the Monte Carlo tail oracle reproduces the closed form
    let mut rng = RngStream::new(11, 1).rng();
    let (p, se) = driftless_tail_mc(ch.measure(), 0.5, 1.0, 100_000, &mut rng).unwrap();
    assert!((p - half_stable_tail(0.5, 1.0)).abs() < 3.0 * se);
}

#[test]
fn cdf_reduces_to_tail_without_killing() {
    let ch = stable(0.0, 0.0, 0.5);
    let v = cdf_inverse_killed(&ch, 1.0, 0.4, half_stable_tail).unwrap();
    assert_eq!(v, half_stable_tail(0.4, 1.0));
    assert_eq!(cdf_inverse_killed(&ch, 0.0, 0.4, |_, _| 0.0).unwrap(), 1.0);
}

#[test]
fn crossing_integral_reproduces_tail() {
    let mu = LevyMeasure::stable(0.5).unwrap();
    for (r, t) in [(1.0, 1.0), (0.5, 2.0)] {
        let (v, se) = crossing_integral_mc(&mu, r, t, 64, 20_000, 12).unwrap();
        let exact = half_stable_tail(r, t);
        assert!((v - exact).abs() < 3.0 * se, "r {r} t {t}: {v} ± {se} vs {exact}");
    }
}

#[test]
fn path_passages_are_monotone_and_reproducible() {
    let ch = BernsteinChar::new(0.5, 0.3, LevyMeasure::gamma(2.0, 1.0).unwrap()).unwrap();
    let sampler = InverseSampler::new(&ch, 1e-3).unwrap();
    let ts = [0.1, 0.4, 0.9, 1.5];
    for stream in 0..50 {
        let s = RngStream::new(13, stream);
        let cap = sample_kill_time(0.5, &mut s.domain(DOMAIN_KILL).rng()).unwrap();
        let mut a = vec![Default::default(); 4];
        let mut b = vec![Default::default(); 4];
        sampler.first_passages(&ts, cap, &mut s.rng(), &mut a).unwrap();
        sampler.first_passages(&ts, cap, &mut s.rng(), &mut b).unwrap();
        assert_eq!(a, b);
        assert!(a.windows(2).all(|w| w[0].tau <= w[1].tau));
        assert!(a.iter().all(|e| e.tau >= 0.0 && e.tau.is_finite() && e.tau <= cap));
    }
}
