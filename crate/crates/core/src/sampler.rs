//! Subordinator increments, exponential killing and the inverse killed
//! subordinator `E_t^S = E_t ^ S`.

use alloc::boxed::Box;
use alloc::vec::Vec;
use core::f64::consts::{E, PI};

#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Exp1, Gamma, Open01, Poisson};

use crate::bernstein::{BernsteinChar, LevyMeasure, TabulatedTail};
use crate::error::{domain, Error, Result};

/// Generator behind every stream.
pub type StreamRng = ChaCha8Rng;

/// Stream domain for the subordinator clock.
pub const DOMAIN_CLOCK: u64 = 0;
/// Stream domain for exponential kill times.
pub const DOMAIN_KILL: u64 = 1;
/// Stream domain for simulated Markov paths.
pub const DOMAIN_MARKOV: u64 = 2;
/// Stream domain for Monte Carlo oracles that must be independent of the
/// estimator they check.
pub const DOMAIN_ORACLE: u64 = 3;

/// Step budget of a path-based first-passage simulation.
pub const MAX_PATH_STEPS: u64 = 10_000_000;

/// Target for the expected number of steps when choosing a default grid.
pub const TARGET_PATH_STEPS: f64 = 1e5;

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// A reproducible random stream identified by `(seed, stream)`.
///
/// The seed selects the ChaCha key and the stream id selects ChaCha's 64-bit
/// stream, so distinct ids never overlap.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RngStream {
    pub seed: u64,
    pub stream: u64,
}

impl RngStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        Self { seed, stream }
    }

    pub fn rng(&self) -> StreamRng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }

    /// Same stream id under an independent key, one per `domain`.
    pub fn domain(&self, domain: u64) -> Self {
        if domain == DOMAIN_CLOCK {
            return *self;
        }
        Self {
            seed: splitmix64(self.seed ^ splitmix64(domain.wrapping_mul(0xA076_1D64_78BD_642F))),
            stream: self.stream,
        }
    }
}

/// Derives a child seed, e.g. for sweep cells or grid points.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    splitmix64(seed ^ splitmix64(index.wrapping_add(0x5851_F42D_4C95_7F2D)))
}

/// Positive stable variate with `E[e^{-lambda X}] = e^{-lambda^beta}`
/// (Kanter's representation).
pub fn positive_stable<R: Rng + ?Sized>(beta: f64, rng: &mut R) -> f64 {
    let u: f64 = PI * rng.sample::<f64, _>(Open01);
    let e: f64 = rng.sample(Exp1);
    let a = (beta * u).sin() / u.sin().powf(1.0 / beta);
    let b = ((1.0 - beta) * u).sin() / e;
    a * b.powf((1.0 - beta) / beta)
}

/// Prepared sampler of `D_{s + ds} - D_s`.
#[derive(Debug, Clone)]
pub struct IncrementSampler {
    drift_part: f64,
    jumps: JumpPart,
}

#[derive(Debug, Clone)]
enum JumpPart {
    None,
    Stable { scale: f64, beta: f64 },
    Mixture(Vec<(f64, f64)>),
    Gamma(Gamma<f64>),
    Compound { count: Option<Poisson<f64>>, size: Exp<f64> },
    Tabulated { count: Option<Poisson<f64>>, level: f64, tail: TabulatedTail },
}

impl IncrementSampler {
    pub fn new(measure: &LevyMeasure, drift: f64, ds: f64) -> Result<Self> {
        if !(ds > 0.0 && ds.is_finite()) {
            return Err(domain("ds", ds));
        }
        if !(drift >= 0.0) {
            return Err(domain("k", drift));
        }
        measure.validate()?;
        let mut drift_part = drift * ds;
        let cfg = |e: rand_distr::GammaError| Error::Config(alloc::format!("gamma increment: {e}"));
        let jumps = match measure {
            LevyMeasure::Null => JumpPart::None,
            LevyMeasure::Stable { beta } => JumpPart::Stable { scale: ds.powf(1.0 / beta), beta: *beta },
            LevyMeasure::DistributedOrder(atoms) => {
                JumpPart::Mixture(atoms.iter().map(|a| ((a.weight * ds).powf(1.0 / a.beta), a.beta)).collect())
            }
            LevyMeasure::Gamma { shape, rate } => JumpPart::Gamma(Gamma::new(shape * ds, 1.0 / rate).map_err(cfg)?),
            LevyMeasure::ExpJumps { intensity, rate } => JumpPart::Compound {
                count: poisson(intensity * ds)?,
                size: Exp::new(*rate).map_err(|e| Error::Config(alloc::format!("{e}")))?,
            },
            LevyMeasure::Tabulated(tail) => {
                // jumps below eps = ds replaced by their mean
                let eps = ds;
                drift_part += measure.small_jump_mean(eps)? * ds;
                let level = measure.tail(eps)?;
                JumpPart::Tabulated { count: poisson(level * ds)?, level, tail: tail.clone() }
            }
        };
        Ok(Self { drift_part, jumps })
    }

    /// True when the jump part is exact (no small-jump truncation).
    pub fn is_exact(&self) -> bool {
        !matches!(self.jumps, JumpPart::Tabulated { .. })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let jump = match &self.jumps {
            JumpPart::None => 0.0,
            JumpPart::Stable { scale, beta } => scale * positive_stable(*beta, rng),
            JumpPart::Mixture(parts) => parts.iter().map(|(scale, beta)| scale * positive_stable(*beta, rng)).sum(),
            JumpPart::Gamma(g) => g.sample(rng),
            JumpPart::Compound { count, size } => {
                let n = count.as_ref().map_or(0, |p| p.sample(rng) as u64);
                (0..n).map(|_| size.sample(rng)).sum()
            }
            JumpPart::Tabulated { count, level, tail } => {
                let n = count.as_ref().map_or(0, |p| p.sample(rng) as u64);
                (0..n)
                    .map(|_| {
                        let u: f64 = rng.sample(Open01);
                        tail.inverse_tail(u * level)
                    })
                    .sum()
            }
        };
        self.drift_part + jump
    }
}

fn poisson(mean: f64) -> Result<Option<Poisson<f64>>> {
    if mean == 0.0 {
        return Ok(None);
    }
    Poisson::new(mean).map(Some).map_err(|e| Error::Config(alloc::format!("poisson jump count: {e}")))
}

/// One draw of `D_{s + ds} - D_s`.
pub fn sample_increment<R: Rng + ?Sized>(measure: &LevyMeasure, drift: f64, ds: f64, rng: &mut R) -> Result<f64> {
    Ok(IncrementSampler::new(measure, drift, ds)?.sample(rng))
}

/// `Exp(a)` kill time; infinite when `a = 0`. Draws nothing when `a = 0`.
pub fn sample_kill_time<R: Rng + ?Sized>(kill_rate: f64, rng: &mut R) -> Result<f64> {
    if !(kill_rate >= 0.0) || kill_rate.is_infinite() {
        return Err(domain("a", kill_rate));
    }
    if kill_rate == 0.0 {
        return Ok(f64::INFINITY);
    }
    let e: f64 = rng.sample(Exp1);
    Ok(e / kill_rate)
}

/// One draw of `E_t^S`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct InverseSample {
    pub tau: f64,
    /// `tau` is the kill time, which came no later than `E_t`
    pub killed: bool,
    /// Upper bound on the upward bias of `tau`: the grid step for path
    /// sampling, zero for exact samplers.
    pub bias_bound: f64,
}

/// Sampler of the first-passage time `E_t = inf{s : D_s > t}`, ignoring the
/// kill rate of the characteristics.
#[derive(Debug, Clone)]
pub struct InverseSampler {
    method: Method,
}

#[derive(Debug, Clone)]
enum Method {
    /// `E_t = (t / D_1)^beta` for the driftless stable subordinator
    ExactStable { beta: f64 },
    /// `E_t = t / k` for a pure drift
    PureDrift { drift: f64 },
    /// first grid time with `D_{s_j} >= t`
    Path { ds: f64, increments: Box<IncrementSampler>, max_steps: u64 },
}

impl InverseSampler {
    pub fn new(ch: &BernsteinChar, ds: f64) -> Result<Self> {
        let method = match ch.measure() {
            LevyMeasure::Stable { beta } if ch.drift() == 0.0 => Method::ExactStable { beta: *beta },
            LevyMeasure::Null => Method::PureDrift { drift: ch.drift() },
            measure => Method::Path {
                ds,
                increments: Box::new(IncrementSampler::new(measure, ch.drift(), ds)?),
                max_steps: MAX_PATH_STEPS,
            },
        };
        Ok(Self { method })
    }

    /// Lowers the step budget of the path method.
    pub fn with_max_steps(mut self, max_steps: u64) -> Self {
        if let Method::Path { max_steps: m, .. } = &mut self.method {
            *m = max_steps;
        }
        self
    }

    pub fn is_exact(&self) -> bool {
        !matches!(self.method, Method::Path { .. })
    }

    pub fn bias_bound(&self) -> f64 {
        match self.method {
            Method::Path { ds, .. } => ds,
            _ => 0.0,
        }
    }

    /// `E_t ^ cap` for each `t` in the non-decreasing slice `ts`, written to
    /// `out`. Path sampling uses a single subordinator path for all levels, so
    /// the results are monotone in `t`. Returns whether each entry was capped.
    pub fn first_passages<R: Rng + ?Sized>(
        &self,
        ts: &[f64],
        cap: f64,
        rng: &mut R,
        out: &mut [InverseSample],
    ) -> Result<()> {
        debug_assert_eq!(ts.len(), out.len());
        let finish = |e: f64, bias: f64| {
            if cap <= e {
                InverseSample { tau: cap, killed: true, bias_bound: 0.0 }
            } else {
                InverseSample { tau: e, killed: false, bias_bound: bias }
            }
        };
        match &self.method {
            Method::ExactStable { beta } => {
                let d1 = positive_stable(*beta, rng);
                for (t, o) in ts.iter().zip(out.iter_mut()) {
                    *o = finish((t / d1).powf(*beta), 0.0);
                }
            }
            Method::PureDrift { drift } => {
                for (t, o) in ts.iter().zip(out.iter_mut()) {
                    *o = finish(t / drift, 0.0);
                }
            }
            Method::Path { ds, increments, max_steps } => {
                let mut level = 0.0;
                let mut j: u64 = 0;
                for (t, o) in ts.iter().zip(out.iter_mut()) {
                    loop {
                        let s = j as f64 * ds;
                        if level >= *t {
                            *o = finish(s, *ds);
                            break;
                        }
                        if s >= cap {
                            *o = InverseSample { tau: cap, killed: true, bias_bound: 0.0 };
                            break;
                        }
                        if j >= *max_steps {
                            return Err(Error::Runtime(alloc::format!(
                                "no passage above t = {t} within {max_steps} steps of {ds}; decrease the horizon or increase the step"
                            )));
                        }
                        level += increments.sample(rng);
                        j += 1;
                    }
                }
            }
        }
        Ok(())
    }

    pub fn sample<R: Rng + ?Sized>(&self, t: f64, cap: f64, rng: &mut R) -> Result<InverseSample> {
        if !(t > 0.0) {
            return Err(domain("t", t));
        }
        let mut out = [InverseSample { tau: 0.0, killed: false, bias_bound: 0.0 }];
        self.first_passages(&[t], cap, rng, &mut out)?;
        Ok(out[0])
    }
}

/// One draw of the unkilled first-passage time `E_t`.
pub fn sample_inverse_marginal<R: Rng + ?Sized>(
    ch: &BernsteinChar,
    t: f64,
    ds: f64,
    rng: &mut R,
) -> Result<InverseSample> {
    InverseSampler::new(ch, ds)?.sample(t, f64::INFINITY, rng)
}

/// One draw of `E_t^S = E_t ^ S`; the kill time comes from its own stream.
pub fn sample_inverse_killed<R1, R2>(
    ch: &BernsteinChar,
    t: f64,
    ds: f64,
    clock: &mut R1,
    kill: &mut R2,
) -> Result<InverseSample>
where
    R1: Rng + ?Sized,
    R2: Rng + ?Sized,
{
    let cap = sample_kill_time(ch.kill_rate(), kill)?;
    InverseSampler::new(ch, ds)?.sample(t, cap, clock)
}

/// A subordinator sampled on a uniform grid `s_j = j ds`.
#[derive(Debug, Clone, PartialEq)]
pub struct SubordinatorPath {
    pub ds: f64,
    /// `D_{s_0} = 0 <= D_{s_1} <= ...`
    pub values: Vec<f64>,
    /// first grid index at or beyond the kill time
    pub kill_index: Option<usize>,
}

impl SubordinatorPath {
    /// Samples `steps` increments, and the kill time from `kill`.
    pub fn sample<R1, R2>(ch: &BernsteinChar, ds: f64, steps: usize, clock: &mut R1, kill: &mut R2) -> Result<Self>
    where
        R1: Rng + ?Sized,
        R2: Rng + ?Sized,
    {
        let increments = IncrementSampler::new(ch.measure(), ch.drift(), ds)?;
        let s_kill = sample_kill_time(ch.kill_rate(), kill)?;
        let mut values = Vec::with_capacity(steps + 1);
        values.push(0.0);
        let mut level = 0.0;
        for _ in 0..steps {
            level += increments.sample(clock);
            values.push(level);
        }
        let kill_index = (0..=steps).find(|&j| j as f64 * ds >= s_kill);
        Ok(Self { ds, values, kill_index })
    }

    /// `E_t` on the grid: the first `s_j` with `D_{s_j} >= t`, capped at the
    /// kill index. `None` if the path ends first.
    pub fn first_passage(&self, t: f64) -> Option<f64> {
        let end = self.kill_index.map_or(self.values.len(), |k| k + 1);
        self.values[..end]
            .iter()
            .position(|&d| d >= t)
            .map(|j| j as f64 * self.ds)
            .or_else(|| self.kill_index.map(|k| k as f64 * self.ds))
    }
}

/// Grid step for which the expected number of steps to pass `t` stays below
/// [`TARGET_PATH_STEPS`], from the renewal bound `E[E_t] <= e / phi_0(1/t)`.
pub fn default_step(ch: &BernsteinChar, t: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(domain("t", t));
    }
    let phi0 = ch.phi_unkilled(1.0 / t)?;
    if !(phi0 > 0.0) {
        return Err(Error::Config("unkilled exponent vanishes; the subordinator never moves".into()));
    }
    Ok(E / (phi0 * TARGET_PATH_STEPS))
}

/// `P(E_s^S <= r) = 1 - e^{-a r} (1 - P(Dbar_r >= s - k r))`.
///
/// `driftless_tail(r, level)` must return `P(Dbar_r >= level)` for `r > 0`
/// and `level > 0`. It is not called when `s <= k r` (the probability is 1)
/// or `r = 0` (the probability is 0 for `s > 0`).
pub fn cdf_inverse_killed<F>(ch: &BernsteinChar, s: f64, r: f64, driftless_tail: F) -> Result<f64>
where
    F: FnOnce(f64, f64) -> f64,
{
    if !(s >= 0.0) {
        return Err(domain("s", s));
    }
    if !(r >= 0.0) {
        return Err(domain("r", r));
    }
    let level = s - ch.drift() * r;
    let p_pass = if level <= 0.0 {
        1.0
    } else if r == 0.0 {
        0.0
    } else {
        let p = driftless_tail(r, level);
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::Numeric { what: "cdf oracle outside [0, 1]", residual: p });
        }
        p
    };
    Ok(p_pass - (1.0 - p_pass) * (-ch.kill_rate() * r).exp_m1())
}

/// Monte Carlo estimate of `P(Dbar_r >= level)` with its standard error,
/// drawing `Dbar_r` as a single increment of length `r`.
pub fn driftless_tail_mc<R: Rng + ?Sized>(
    measure: &LevyMeasure,
    r: f64,
    level: f64,
    n: usize,
    rng: &mut R,
) -> Result<(f64, f64)> {
    if n < 2 {
        return Err(Error::Config("need at least two samples".into()));
    }
    let inc = IncrementSampler::new(measure, 0.0, r)?;
    let hits = (0..n).filter(|_| inc.sample(rng) >= level).count();
    let p = hits as f64 / n as f64;
    Ok((p, (p * (1.0 - p) / n as f64).sqrt()))
}

/// Monte Carlo estimate of `int_0^r E[w(t - Dbar_y); Dbar_y < t] dy`, the
/// jump-crossing representation of `P(Dbar_r >= t)`: Gauss-Legendre over `y`
/// with `n_per_node` independent draws of `Dbar_y` at each node. Node `q`
/// draws from stream `q` of `seed`. Returns the estimate and its standard
/// error.
pub fn crossing_integral_mc(
    measure: &LevyMeasure,
    r: f64,
    t: f64,
    nodes: usize,
    n_per_node: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    if !(r > 0.0) {
        return Err(domain("r", r));
    }
    if !(t > 0.0) {
        return Err(domain("t", t));
    }
    if n_per_node < 2 {
        return Err(Error::Config("need at least two samples per node".into()));
    }
    let rule = crate::quadrature::GaussLegendre::new(nodes);
    let mut value = 0.0;
    let mut var = 0.0;
    for (q, (y, weight)) in rule.on_interval(0.0, r).enumerate() {
        let inc = IncrementSampler::new(measure, 0.0, y)?;
        let mut rng = RngStream::new(seed, q as u64).rng();
        let mut m = crate::stats::Moments::default();
        for _ in 0..n_per_node {
            let d = inc.sample(&mut rng);
            m.push(if d < t { measure.tail(t - d)? } else { 0.0 });
        }
        value += weight * m.mean;
        var += (weight * m.stderr()).powi(2);
    }
    Ok((value, var.sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stable_char(a: f64, k: f64, beta: f64) -> BernsteinChar {
        BernsteinChar::new(a, k, LevyMeasure::stable(beta).unwrap()).unwrap()
    }

    #[test]
    fn streams_reproduce_and_differ() {
        let s = RngStream::new(7, 3);
        let a: Vec<u64> = (0..4).map(|_| 0).scan(s.rng(), |r, _| Some(r.random())).collect();
        let b: Vec<u64> = (0..4).map(|_| 0).scan(s.rng(), |r, _| Some(r.random())).collect();
        assert_eq!(a, b);
        let c: u64 = RngStream::new(7, 4).rng().random();
        let d: u64 = s.domain(DOMAIN_KILL).rng().random();
        assert_ne!(a[0], c);
        assert_ne!(a[0], d);
        assert_eq!(s.domain(DOMAIN_CLOCK), s);
    }

    #[test]
    fn pure_drift_increment_is_deterministic() {
        let mut rng = RngStream::new(1, 0).rng();
        assert_eq!(sample_increment(&LevyMeasure::Null, 1.0, 0.25, &mut rng).unwrap(), 0.25);
    }

    #[test]
    fn kill_time_edge_cases() {
        let mut rng = RngStream::new(1, 0).rng();
        assert_eq!(sample_kill_time(0.0, &mut rng).unwrap(), f64::INFINITY);
        assert!(sample_kill_time(-1.0, &mut rng).is_err());
        assert!(sample_kill_time(f64::NAN, &mut rng).is_err());
    }

    #[test]
    fn pure_drift_inverse_is_exact() {
        let ch = BernsteinChar::new(0.0, 1.0, LevyMeasure::Null).unwrap();
        let mut rng = RngStream::new(1, 0).rng();
        let e = sample_inverse_marginal(&ch, 2.0, 0.25, &mut rng).unwrap();
        assert_eq!(e, InverseSample { tau: 2.0, killed: false, bias_bound: 0.0 });
    }

    #[test]
    fn path_budget_is_enforced() {
        let ch = BernsteinChar::new(0.0, 0.0, LevyMeasure::gamma(1.0, 1.0).unwrap()).unwrap();
        let sampler = InverseSampler::new(&ch, 1e-3).unwrap().with_max_steps(10);
        let mut rng = RngStream::new(1, 0).rng();
        assert!(matches!(sampler.sample(100.0, f64::INFINITY, &mut rng), Err(Error::Runtime(_))));
    }

    #[test]
    fn path_first_passage_respects_cap() {
        let ch = stable_char(0.0, 0.5, 0.5);
        let sampler = InverseSampler::new(&ch, 1e-3).unwrap();
        let mut rng = RngStream::new(9, 0).rng();
        let e = sampler.sample(50.0, 0.2, &mut rng).unwrap();
        assert!(e.killed);
        assert_eq!(e.tau, 0.2);
        assert_eq!(e.bias_bound, 0.0);
    }

    #[test]
    fn cdf_formula_edges() {
        let ch = stable_char(1.0, 0.0, 0.5);
        assert_eq!(cdf_inverse_killed(&ch, 0.0, 0.3, |_, _| panic!("not called")).unwrap(), 1.0);
        assert_eq!(cdf_inverse_killed(&ch, 1.0, 0.0, |_, _| panic!("not called")).unwrap(), 0.0);
        let unkilled = stable_char(0.0, 0.0, 0.5);
        assert_eq!(cdf_inverse_killed(&unkilled, 1.0, 0.5, |_, _| 0.3).unwrap(), 0.3);
        assert!(cdf_inverse_killed(&ch, 1.0, 0.5, |_, _| 1.5).is_err());
        // drift branch: s <= k r
        let drifted = stable_char(2.0, 1.0, 0.5);
        assert_eq!(cdf_inverse_killed(&drifted, 0.5, 1.0, |_, _| panic!("not called")).unwrap(), 1.0);
    }

    #[test]
    fn subordinator_path_is_monotone() {
        let ch = BernsteinChar::new(0.5, 0.1, LevyMeasure::gamma(2.0, 1.0).unwrap()).unwrap();
        let s = RngStream::new(4, 0);
        let p = SubordinatorPath::sample(&ch, 0.01, 500, &mut s.rng(), &mut s.domain(DOMAIN_KILL).rng()).unwrap();
        assert_eq!(p.values[0], 0.0);
        assert!(p.values.windows(2).all(|w| w[0] <= w[1]));
        let (e1, e2) = (p.first_passage(0.1), p.first_passage(0.3));
        if let (Some(e1), Some(e2)) = (e1, e2) {
            assert!(e1 <= e2);
        }
    }

    #[test]
    fn default_step_targets_budget() {
        let ch = stable_char(0.0, 0.5, 0.5);
        let ds = default_step(&ch, 1.0).unwrap();
        // phi_0(1) = 1.5
        assert!((ds - E / 1.5e5).abs() < 1e-15);
    }
}
