//! Monte Carlo estimation of `u(t, x) = E[T_{E_t^S} f(x)]`.
//!
//! Samples are split into blocks of [`BLOCK_SIZE`]; block `b` of a run draws
//! from stream id `b`, and block statistics are merged by a tree whose shape
//! depends only on the block count. Results are therefore identical for any
//! [`Executor`] and any number of workers.

use alloc::vec;
use alloc::vec::Vec;

use crate::bernstein::BernsteinChar;
use crate::error::{domain, Error, Result};
use crate::models::{MarkovModel, ModelKind, TestFunction};
use crate::sampler::{
    default_step, derive_seed, sample_kill_time, InverseSample, InverseSampler, RngStream, DOMAIN_KILL, DOMAIN_MARKOV,
};
use crate::stats::{pairwise_merge, Moments};

/// Samples per block.
pub const BLOCK_SIZE: usize = 4096;
/// Smallest accepted sample count.
pub const MIN_SAMPLES: usize = 100;
/// Default sample count.
pub const DEFAULT_SAMPLES: usize = 100_000;

/// How a draw of the clock `tau` is turned into a sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    /// Average `T_tau f(x)`, evaluated deterministically.
    Conditional,
    /// Simulate the Markov process to `tau` and average `f(X_tau)`.
    Pathwise,
}

impl Mode {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Conditional => "conditional",
            Self::Pathwise => "pathwise",
        }
    }
}

/// Runs independent jobs, returning results in index order.
pub trait Executor {
    fn map<T, F>(&self, count: usize, job: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send;

    /// Seconds since an arbitrary origin, when a clock is available.
    fn clock(&self) -> Option<f64> {
        None
    }
}

/// Runs jobs one after another on the calling thread.
#[derive(Debug, Clone, Copy, Default)]
pub struct Sequential;

impl Executor for Sequential {
    fn map<T, F>(&self, count: usize, job: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        (0..count).map(job).collect()
    }
}

/// Parameters of a Monte Carlo run.
#[derive(Debug, Clone, PartialEq)]
pub struct McSettings {
    pub samples: usize,
    pub seed: u64,
    pub mode: Mode,
    /// Grid step of path sampling; defaults to [`default_step`] at the
    /// largest requested time.
    pub step: Option<f64>,
    /// Accept finite-activity Levy measures.
    pub allow_finite_activity: bool,
}

impl McSettings {
    pub fn new(samples: usize, seed: u64) -> Self {
        Self { samples, seed, mode: Mode::Conditional, step: None, allow_finite_activity: false }
    }

    pub fn mode(mut self, mode: Mode) -> Self {
        self.mode = mode;
        self
    }

    pub fn step(mut self, ds: f64) -> Self {
        self.step = Some(ds);
        self
    }

    pub fn allow_finite_activity(mut self, allow: bool) -> Self {
        self.allow_finite_activity = allow;
        self
    }
}

/// One Monte Carlo estimate of `u(t, x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct McEstimate {
    pub t: f64,
    pub x: f64,
    pub mean: f64,
    /// sample standard deviation over `sqrt(n)`
    pub stderr: f64,
    pub n: usize,
    pub seed: u64,
    /// zero when the executor has no clock
    pub wall_time: f64,
    pub mode: Mode,
    /// Bound on the bias from path discretization of the clock; infinite when
    /// `L f` is not known to be bounded.
    pub bias_bound: f64,
}

impl McEstimate {
    /// `sigmas * stderr + bias_bound`.
    pub fn error_budget(&self, sigmas: f64) -> f64 {
        sigmas * self.stderr + self.bias_bound
    }
}

/// `u(t, x)` at a single time.
pub fn estimate_u<E: Executor>(
    exec: &E,
    ch: &BernsteinChar,
    model: &MarkovModel,
    f: &TestFunction,
    t: f64,
    x: f64,
    settings: &McSettings,
) -> Result<McEstimate> {
    Ok(estimate_u_curve(exec, ch, model, f, &[t], x, settings)?.remove(0))
}

/// `u(t, x)` over a strictly increasing grid of times. Path-sampled clocks
/// reuse one subordinator path for the whole grid; exact clocks draw each
/// grid point independently.
pub fn estimate_u_curve<E: Executor>(
    exec: &E,
    ch: &BernsteinChar,
    model: &MarkovModel,
    f: &TestFunction,
    ts: &[f64],
    x: f64,
    settings: &McSettings,
) -> Result<Vec<McEstimate>> {
    run(exec, ch, model, f, ts, x, settings, Clock::Killed)
}

/// The unkilled pipeline `u(t, x) = E[T_{E_t} f(x)]`, coded without any
/// kill-time draw. Requires a zero kill rate.
pub fn estimate_u_curve_unkilled<E: Executor>(
    exec: &E,
    ch: &BernsteinChar,
    model: &MarkovModel,
    f: &TestFunction,
    ts: &[f64],
    x: f64,
    settings: &McSettings,
) -> Result<Vec<McEstimate>> {
    if ch.kill_rate() != 0.0 {
        return Err(Error::Precondition("the unkilled pipeline needs a zero kill rate".into()));
    }
    run(exec, ch, model, f, ts, x, settings, Clock::Unkilled)
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Clock {
    Killed,
    Unkilled,
}

/// `sup |L f|` when known.
fn generator_sup(model: &MarkovModel, f: &TestFunction) -> Option<f64> {
    let f2 = match *f {
        TestFunction::Constant(_) => return Some(0.0),
        TestFunction::Sine { mode } | TestFunction::Cosine { mode } => (mode * mode) as f64,
        TestFunction::Gaussian { width } => 1.0 / (width * width),
    };
    match model.kind() {
        ModelKind::Eigen { theta } => Some(theta * f.sup_norm()),
        ModelKind::BrownianTorus | ModelKind::BrownianLine { .. } => Some(0.5 * f2),
        ModelKind::JumpDiffusion(_) => None,
    }
}

fn validate(
    ch: &BernsteinChar,
    model: &MarkovModel,
    f: &TestFunction,
    ts: &[f64],
    x: f64,
    settings: &McSettings,
) -> Result<()> {
    if ts.is_empty() {
        return Err(Error::Config("empty time grid".into()));
    }
    for &t in ts {
        if !(t > 0.0 && t.is_finite()) {
            return Err(domain("t", t));
        }
    }
    if ts.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Config("time grid must be strictly increasing".into()));
    }
    if !x.is_finite() {
        return Err(domain("x", x));
    }
    if settings.samples < MIN_SAMPLES {
        return Err(Error::Config(alloc::format!("need at least {MIN_SAMPLES} samples, got {}", settings.samples)));
    }
    if let Some(ds) = settings.step {
        if !(ds > 0.0 && ds.is_finite()) {
            return Err(domain("step", ds));
        }
    }
    model.check_function(f)?;
    let measure = ch.measure();
    if !measure.is_null() && !measure.is_infinite_activity() && !settings.allow_finite_activity {
        return Err(Error::Config(alloc::format!(
            "the {} measure has finite activity, so the time change is not continuous; pass the finite-activity override to proceed",
            measure.family_name()
        )));
    }
    match (settings.mode, model.has_deterministic_semigroup()) {
        (Mode::Conditional, false) => Err(Error::Config(alloc::format!(
            "conditional mode needs a deterministic semigroup; {} has none",
            model.name()
        ))),
        (Mode::Pathwise, _) if matches!(model.kind(), ModelKind::Eigen { .. }) => {
            Err(Error::Config("pathwise mode needs a simulable model; the eigen model has no paths".into()))
        }
        _ => Ok(()),
    }
}

#[allow(clippy::too_many_arguments)]
fn run<E: Executor>(
    exec: &E,
    ch: &BernsteinChar,
    model: &MarkovModel,
    f: &TestFunction,
    ts: &[f64],
    x: f64,
    settings: &McSettings,
    clock: Clock,
) -> Result<Vec<McEstimate>> {
    validate(ch, model, f, ts, x, settings)?;
    let start = exec.clock();
    let t_max = ts[ts.len() - 1];
    let ds = match settings.step {
        Some(ds) => ds,
        None => default_step(ch, t_max)?,
    };
    let sampler = InverseSampler::new(ch, ds)?;
    // exact clocks give independent grid points; path clocks share a path
    let groups: Vec<&[f64]> = if sampler.is_exact() { ts.chunks(1).collect() } else { vec![ts] };
    let blocks = settings.samples.div_ceil(BLOCK_SIZE);
    let jobs = groups.len() * blocks;
    let job = |index: usize| -> Result<Vec<Moments>> {
        let (g, b) = (index / blocks, index % blocks);
        let times = groups[g];
        let stream = RngStream::new(derive_seed(settings.seed, g as u64), b as u64);
        let size = BLOCK_SIZE.min(settings.samples - b * BLOCK_SIZE);
        sample_block(ch, model, f, times, x, settings.mode, &sampler, stream, size, clock)
    };
    let mut per_group: Vec<Vec<Vec<Moments>>> = vec![Vec::with_capacity(blocks); groups.len()];
    for (index, block) in exec.map(jobs, job).into_iter().enumerate() {
        per_group[index / blocks].push(block?);
    }
    let wall_time = match (start, exec.clock()) {
        (Some(a), Some(b)) => b - a,
        _ => 0.0,
    };
    let bias_bound = if sampler.is_exact() {
        0.0
    } else {
        generator_sup(model, f).map_or(f64::INFINITY, |l| ds * model.semigroup_bound() * l)
    };
    let mut out = Vec::with_capacity(ts.len());
    for (g, times) in groups.iter().enumerate() {
        for (i, &t) in times.iter().enumerate() {
            let column: Vec<Moments> = per_group[g].iter().map(|block| block[i]).collect();
            let m = pairwise_merge(&column);
            out.push(McEstimate {
                t,
                x,
                mean: m.mean,
                stderr: m.stderr(),
                n: m.count as usize,
                seed: settings.seed,
                wall_time,
                mode: settings.mode,
                bias_bound,
            });
        }
    }
    Ok(out)
}

#[allow(clippy::too_many_arguments)]
fn sample_block(
    ch: &BernsteinChar,
    model: &MarkovModel,
    f: &TestFunction,
    times: &[f64],
    x: f64,
    mode: Mode,
    sampler: &InverseSampler,
    stream: RngStream,
    size: usize,
    clock: Clock,
) -> Result<Vec<Moments>> {
    let mut clock_rng = stream.rng();
    let mut kill_rng = stream.domain(DOMAIN_KILL).rng();
    let mut markov_rng = stream.domain(DOMAIN_MARKOV).rng();
    let mut taus = vec![InverseSample { tau: 0.0, killed: false, bias_bound: 0.0 }; times.len()];
    let mut horizons = vec![0.0; times.len()];
    let mut values = vec![0.0; times.len()];
    let mut moments = vec![Moments::default(); times.len()];
    for _ in 0..size {
        let cap = match clock {
            Clock::Killed => sample_kill_time(ch.kill_rate(), &mut kill_rng)?,
            Clock::Unkilled => f64::INFINITY,
        };
        sampler.first_passages(times, cap, &mut clock_rng, &mut taus)?;
        match mode {
            Mode::Conditional => {
                for (v, s) in values.iter_mut().zip(&taus) {
                    *v = model.semigroup(s.tau, f, x)?;
                }
            }
            Mode::Pathwise => {
                for (h, s) in horizons.iter_mut().zip(&taus) {
                    *h = s.tau;
                }
                model.sample_path_value(&horizons, f, x, &mut markov_rng, &mut values)?;
            }
        }
        for (m, v) in moments.iter_mut().zip(&values) {
            m.push(*v);
        }
    }
    Ok(moments)
}
