//! Markov models supplying the semigroup `T_s` and the generator `L`.

use core::f64::consts::{PI, TAU};

#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;
use rand::Rng;
use rand_distr::{Distribution, Open01, Poisson, StandardNormal};

use crate::error::{domain, Error, Result};
use crate::quadrature::{gauss_kronrod, GaussHermite};
use crate::sampler::RngStream;
use crate::stats::Moments;

/// Bounded test functions with analytic first and second derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TestFunction {
    Constant(f64),
    /// `sin(mode x)`
    Sine {
        mode: u32,
    },
    /// `cos(mode x)`
    Cosine {
        mode: u32,
    },
    /// `exp(-x^2 / (2 width^2))`
    Gaussian {
        width: f64,
    },
}

impl TestFunction {
    pub fn value(&self, x: f64) -> f64 {
        match *self {
            Self::Constant(c) => c,
            Self::Sine { mode } => (mode as f64 * x).sin(),
            Self::Cosine { mode } => (mode as f64 * x).cos(),
            Self::Gaussian { width } => (-0.5 * (x / width).powi(2)).exp(),
        }
    }

    pub fn d1(&self, x: f64) -> f64 {
        match *self {
            Self::Constant(_) => 0.0,
            Self::Sine { mode } => mode as f64 * (mode as f64 * x).cos(),
            Self::Cosine { mode } => -(mode as f64) * (mode as f64 * x).sin(),
            Self::Gaussian { width } => -x / (width * width) * self.value(x),
        }
    }

    pub fn d2(&self, x: f64) -> f64 {
        match *self {
            Self::Constant(_) => 0.0,
            Self::Sine { mode } | Self::Cosine { mode } => -((mode * mode) as f64) * self.value(x),
            Self::Gaussian { width } => {
                let w2 = width * width;
                (x * x / (w2 * w2) - 1.0 / w2) * self.value(x)
            }
        }
    }

    pub fn sup_norm(&self) -> f64 {
        match *self {
            Self::Constant(c) => c.abs(),
            Self::Sine { mode: 0 } => 0.0,
            _ => 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::Constant(c) if !c.is_finite() => Err(domain("constant", c)),
            Self::Gaussian { width } if !(width > 0.0 && width.is_finite()) => Err(domain("width", width)),
            _ => Ok(()),
        }
    }

    /// `theta` with `L f = -theta f` under `model`, when known.
    pub fn eigenvalue(&self, model: &MarkovModel) -> Option<f64> {
        match (model.kind(), self) {
            (_, Self::Constant(_)) => Some(0.0),
            (ModelKind::Eigen { theta }, _) => Some(*theta),
            (ModelKind::BrownianTorus, Self::Sine { mode } | Self::Cosine { mode }) => Some(0.5 * (mode * mode) as f64),
            _ => None,
        }
    }
}

/// `constant + slope * y`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Affine {
    pub constant: f64,
    pub slope: f64,
}

impl Affine {
    pub fn eval(&self, y: f64) -> f64 {
        self.constant + self.slope * y
    }

    pub fn lipschitz(&self) -> f64 {
        self.slope.abs()
    }
}

/// Jump sizes `Exp(rate)` truncated to `(0, max_size]`, arriving at
/// `intensity` per unit time; mirrored to both signs when `symmetric`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JumpLaw {
    pub intensity: f64,
    pub rate: f64,
    pub max_size: f64,
    pub symmetric: bool,
}

impl JumpLaw {
    fn normalizer(&self) -> f64 {
        -(-self.rate * self.max_size).exp_m1()
    }

    /// Density of the jump intensity measure on positive sizes.
    pub fn density(&self, x: f64) -> f64 {
        let ax = x.abs();
        if ax == 0.0 || ax > self.max_size || (x < 0.0 && !self.symmetric) {
            return 0.0;
        }
        let share = if self.symmetric { 0.5 } else { 1.0 };
        share * self.intensity * self.rate * (-self.rate * ax).exp() / self.normalizer()
    }

    /// Intensity mass of sizes in `(lo, hi]`, `0 <= lo <= hi`, on one side.
    pub fn mass(&self, lo: f64, hi: f64) -> f64 {
        let (lo, hi) = (lo.clamp(0.0, self.max_size), hi.clamp(0.0, self.max_size));
        let share = if self.symmetric { 0.5 } else { 1.0 };
        share * self.intensity * ((-self.rate * lo).exp() - (-self.rate * hi).exp()) / self.normalizer()
    }

    /// `int_{|x| < 1} x nu(dx)`.
    pub fn small_mean(&self) -> f64 {
        if self.symmetric {
            return 0.0;
        }
        let b = self.max_size.min(1.0);
        let r = self.rate;
        self.intensity * (1.0 - (-r * b).exp() * (1.0 + r * b)) / (r * self.normalizer())
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.sample(Open01);
        let size = -(-u * self.normalizer()).ln_1p() / self.rate;
        if self.symmetric && rng.random::<bool>() {
            -size
        } else {
            size
        }
    }
}

/// `dY = b(Y) ds + sigma(Y) dB + int_{|x|<1} F x Ntilde(ds, dx) + int_{|x|>=1} Gjump x N(ds, dx)`
/// with affine `b`, `sigma` and constant jump scales `F`, `Gjump`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JumpDiffusion {
    pub drift: Affine,
    pub diffusion: Affine,
    pub small_jump_scale: f64,
    pub large_jump_scale: f64,
    pub jumps: JumpLaw,
    /// Euler step; defaults to `min(1e-3, horizon / 100)`
    pub step: Option<f64>,
}

impl JumpDiffusion {
    /// Ornstein-Uhlenbeck drift `-y`, unit diffusion and unit-intensity
    /// `Exp(1)` jumps truncated at 5.
    pub fn ou_with_exp_jumps() -> Self {
        Self {
            drift: Affine { constant: 0.0, slope: -1.0 },
            diffusion: Affine { constant: 1.0, slope: 0.0 },
            small_jump_scale: 1.0,
            large_jump_scale: 1.0,
            jumps: JumpLaw { intensity: 1.0, rate: 1.0, max_size: 5.0, symmetric: false },
            step: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let j = &self.jumps;
        for (what, v) in [
            ("drift.constant", self.drift.constant),
            ("drift.slope", self.drift.slope),
            ("diffusion.constant", self.diffusion.constant),
            ("diffusion.slope", self.diffusion.slope),
            ("small_jump_scale", self.small_jump_scale),
            ("large_jump_scale", self.large_jump_scale),
        ] {
            if !v.is_finite() {
                return Err(domain(what, v));
            }
        }
        if !(j.intensity >= 0.0 && j.intensity.is_finite()) {
            return Err(domain("jumps.intensity", j.intensity));
        }
        if !(j.rate > 0.0 && j.rate.is_finite()) {
            return Err(domain("jumps.rate", j.rate));
        }
        if !(j.max_size > 0.0 && j.max_size.is_finite()) {
            return Err(domain("jumps.max_size", j.max_size));
        }
        if let Some(h) = self.step {
            if !(h > 0.0) {
                return Err(domain("step", h));
            }
        }
        Ok(())
    }

    /// Drift after compensating small jumps: `b(y) - F int_{|x|<1} x nu(dx)`.
    pub fn effective_drift(&self, y: f64) -> f64 {
        self.drift.eval(y) - self.small_jump_scale * self.jumps.small_mean()
    }

    fn jump_scale(&self, x: f64) -> f64 {
        if x.abs() < 1.0 {
            self.small_jump_scale
        } else {
            self.large_jump_scale
        }
    }

    fn euler_step(&self, horizon: f64) -> f64 {
        self.step.unwrap_or(1e-3_f64.min(horizon / 100.0))
    }

    /// Advances `y` from time 0 through each horizon in the non-decreasing
    /// slice `horizons`, recording `Y` at each.
    pub fn simulate<R: Rng + ?Sized>(&self, y0: f64, horizons: &[f64], rng: &mut R, out: &mut [f64]) -> Result<()> {
        let last = horizons.last().copied().unwrap_or(0.0);
        let h = self.euler_step(last.max(f64::MIN_POSITIVE));
        let counts = if self.jumps.intensity > 0.0 {
            Some(Poisson::new(self.jumps.intensity * h).map_err(|e| Error::Config(alloc::format!("{e}")))?)
        } else {
            None
        };
        let mut y = y0;
        let mut now = 0.0;
        for (target, o) in horizons.iter().zip(out.iter_mut()) {
            while now < *target {
                let dt = (target - now).min(h);
                let z: f64 = rng.sample(StandardNormal);
                y += self.effective_drift(y) * dt + self.diffusion.eval(y) * dt.sqrt() * z;
                if let Some(p) = &counts {
                    // Poisson(intensity dt) via thinning when the step is short
                    let n = if dt == h {
                        p.sample(rng) as u64
                    } else {
                        Poisson::new(self.jumps.intensity * dt).map_or(0, |q| q.sample(rng) as u64)
                    };
                    for _ in 0..n {
                        let x = self.jumps.sample(rng);
                        y += self.jump_scale(x) * x;
                    }
                }
                now = if dt == target - now { *target } else { now + dt };
            }
            *o = y;
        }
        Ok(())
    }
}

/// Model families.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelKind {
    /// `T_s f = e^{-theta s} f` for a fixed eigenfunction `f`.
    Eigen {
        theta: f64,
    },
    /// Half-Laplacian on the circle `[0, 2 pi)`.
    BrownianTorus,
    /// Half-Laplacian on `(-half_width, half_width)`, killed at the boundary.
    BrownianLine {
        half_width: f64,
    },
    JumpDiffusion(JumpDiffusion),
}

/// A Markov model with its uniform semigroup bound `M`.
#[derive(Debug, Clone)]
pub struct MarkovModel {
    kind: ModelKind,
    hermite: GaussHermite,
}

/// Hermite nodes for Gaussian convolutions on the torus at small times.
const HERMITE_NODES: usize = 48;
/// Torus convolutions switch to the periodic trapezoid rule above this time.
const TORUS_FOURIER_TIME: f64 = 1.0;
const TORUS_NODES: usize = 64;

impl MarkovModel {
    pub fn new(kind: ModelKind) -> Result<Self> {
        match &kind {
            ModelKind::Eigen { theta } if !(*theta >= 0.0 && theta.is_finite()) => return Err(domain("theta", *theta)),
            ModelKind::BrownianLine { half_width } if !(*half_width > 0.0 && half_width.is_finite()) => {
                return Err(domain("half_width", *half_width))
            }
            ModelKind::JumpDiffusion(jd) => jd.validate()?,
            _ => {}
        }
        Ok(Self { kind, hermite: GaussHermite::new(HERMITE_NODES) })
    }

    pub fn eigen(theta: f64) -> Result<Self> {
        Self::new(ModelKind::Eigen { theta })
    }

    pub fn brownian_torus() -> Self {
        Self { kind: ModelKind::BrownianTorus, hermite: GaussHermite::new(HERMITE_NODES) }
    }

    pub fn kind(&self) -> &ModelKind {
        &self.kind
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            ModelKind::Eigen { .. } => "eigen",
            ModelKind::BrownianTorus => "brownian-torus",
            ModelKind::BrownianLine { .. } => "brownian-line",
            ModelKind::JumpDiffusion(_) => "jump-diffusion",
        }
    }

    /// `sup_t ||T_t||` in the sup norm.
    pub fn semigroup_bound(&self) -> f64 {
        1.0
    }

    /// True when `T_s f(x)` can be evaluated without simulation.
    pub fn has_deterministic_semigroup(&self) -> bool {
        !matches!(self.kind, ModelKind::JumpDiffusion(_))
    }

    /// Rejects functions that do not live on the model's state space: the
    /// torus takes only periodic functions.
    pub fn check_function(&self, f: &TestFunction) -> Result<()> {
        f.validate()?;
        if matches!(self.kind, ModelKind::BrownianTorus) && matches!(f, TestFunction::Gaussian { .. }) {
            return Err(Error::Config("the torus model needs a periodic test function".into()));
        }
        Ok(())
    }

    /// Deterministic `T_s f(x)`.
    pub fn semigroup(&self, s: f64, f: &TestFunction, x: f64) -> Result<f64> {
        if !(s >= 0.0) {
            return Err(domain("s", s));
        }
        self.check_function(f)?;
        if s == 0.0 {
            return Ok(match self.kind {
                ModelKind::BrownianLine { half_width } if x.abs() >= half_width => 0.0,
                _ => f.value(x),
            });
        }
        if let TestFunction::Constant(c) = f {
            match self.kind {
                ModelKind::Eigen { .. } | ModelKind::BrownianTorus => return Ok(*c),
                _ => {}
            }
        }
        match &self.kind {
            ModelKind::Eigen { theta } => Ok((-theta * s).exp() * f.value(x)),
            ModelKind::BrownianTorus => Ok(self.torus_convolution(s, f, x)),
            ModelKind::BrownianLine { half_width } => line_convolution(*half_width, s, f, x),
            ModelKind::JumpDiffusion(_) => {
                Err(Error::Config("jump-diffusion semigroup has no deterministic evaluation; use Monte Carlo".into()))
            }
        }
    }

    fn torus_convolution(&self, s: f64, f: &TestFunction, x: f64) -> f64 {
        if s < TORUS_FOURIER_TIME {
            let sd = s.sqrt();
            return self.hermite.expectation(|z| f.value(x + sd * z));
        }
        // periodic trapezoid against the wrapped heat kernel in Fourier form
        let h = TAU / TORUS_NODES as f64;
        let modes: usize = (2.0 * 40.0 / s).sqrt().ceil() as usize + 1;
        (0..TORUS_NODES)
            .map(|m| {
                let y = m as f64 * h;
                let z = x - y;
                let kernel = (1.0
                    + 2.0 * (1..=modes).map(|n| (-0.5 * (n * n) as f64 * s).exp() * (n as f64 * z).cos()).sum::<f64>())
                    / TAU;
                h * kernel * f.value(y)
            })
            .sum()
    }

    /// Monte Carlo `T_s f(x)` from `n` simulated paths; returns mean and
    /// standard error.
    pub fn semigroup_mc(&self, s: f64, f: &TestFunction, x: f64, n: usize, stream: RngStream) -> Result<(f64, f64)> {
        if !(s >= 0.0) {
            return Err(domain("s", s));
        }
        if n == 0 {
            return Err(Error::Config("Monte Carlo semigroup needs at least one path".into()));
        }
        self.check_function(f)?;
        let mut rng = stream.rng();
        let mut m = Moments::default();
        for _ in 0..n {
            m.push(self.sample_path_value(&[s], f, x, &mut rng, &mut [0.0])?);
        }
        Ok((m.mean, m.stderr()))
    }

    /// Simulates `X` from `x` and writes `f(X_{s_i})` for each non-decreasing
    /// horizon `s_i`. Returns the value at the last horizon.
    pub fn sample_path_value<R: Rng + ?Sized>(
        &self,
        horizons: &[f64],
        f: &TestFunction,
        x: f64,
        rng: &mut R,
        out: &mut [f64],
    ) -> Result<f64> {
        match &self.kind {
            ModelKind::Eigen { .. } => return Err(Error::Config("the eigen model has no path representation".into())),
            ModelKind::BrownianTorus => {
                let mut y = x;
                let mut now = 0.0;
                for (s, o) in horizons.iter().zip(out.iter_mut()) {
                    let z: f64 = rng.sample(StandardNormal);
                    y += (s - now).sqrt() * z;
                    now = *s;
                    *o = f.value(y);
                }
            }
            ModelKind::BrownianLine { half_width } => {
                let mut y = x;
                let mut now = 0.0;
                let mut alive = x.abs() < *half_width;
                for (s, o) in horizons.iter().zip(out.iter_mut()) {
                    let h = 1e-3_f64.min(s / 100.0).max(f64::MIN_POSITIVE);
                    while alive && now < *s {
                        let dt = (s - now).min(h);
                        let z: f64 = rng.sample(StandardNormal);
                        y += dt.sqrt() * z;
                        now += dt;
                        alive = y.abs() < *half_width;
                    }
                    now = *s;
                    *o = if alive { f.value(y) } else { 0.0 };
                }
            }
            ModelKind::JumpDiffusion(jd) => {
                jd.simulate(x, horizons, rng, out)?;
                for o in out.iter_mut() {
                    *o = f.value(*o);
                }
            }
        }
        Ok(out.last().copied().unwrap_or(f.value(x)))
    }

    /// `L f(x)`.
    pub fn generator(&self, f: &TestFunction, x: f64) -> Result<f64> {
        match &self.kind {
            ModelKind::Eigen { theta } => Ok(-theta * f.value(x)),
            ModelKind::BrownianTorus | ModelKind::BrownianLine { .. } => Ok(0.5 * f.d2(x)),
            ModelKind::JumpDiffusion(jd) => {
                let sigma = jd.diffusion.eval(x);
                let local = jd.drift.eval(x) * f.d1(x) + 0.5 * sigma * sigma * f.d2(x);
                let fx = f.value(x);
                let fp = f.d1(x);
                let law = jd.jumps;
                let small = |z: f64| {
                    let dz = jd.small_jump_scale * z;
                    (f.value(x + dz) - fx - dz * fp) * law.density(z)
                };
                let large = |z: f64| (f.value(x + jd.large_jump_scale * z) - fx) * law.density(z);
                let b = law.max_size.min(1.0);
                let mut jumps = gauss_kronrod(small, 0.0, b, 1e-10, 1e-13)?.value;
                if law.max_size > 1.0 {
                    jumps += gauss_kronrod(large, 1.0, law.max_size, 1e-10, 1e-13)?.value;
                }
                if law.symmetric {
                    jumps += gauss_kronrod(small, -b, 0.0, 1e-10, 1e-13)?.value;
                    if law.max_size > 1.0 {
                        jumps += gauss_kronrod(large, -law.max_size, -1.0, 1e-10, 1e-13)?.value;
                    }
                }
                Ok(local + jumps)
            }
        }
    }
}

fn line_convolution(half_width: f64, s: f64, f: &TestFunction, x: f64) -> Result<f64> {
    let l = half_width;
    if x.abs() >= l {
        return Ok(0.0);
    }
    // Dirichlet semigroup = free Brownian motion applied to the odd
    // reflection of f about +-L, extended with period 4L
    let reflected = |y: f64| {
        let period = 4.0 * l;
        let r = y + l - period * ((y + l) / period).floor() - l;
        if r <= l {
            f.value(r)
        } else {
            -f.value(2.0 * l - r)
        }
    };
    let sd = s.sqrt();
    let density = |z: f64| (-0.5 * z * z).exp() / (2.0 * PI).sqrt();
    Ok(gauss_kronrod(|z| reflected(x + sd * z) * density(z), -10.0, 10.0, 1e-11, 1e-14)?.value)
}

/// `T_s f(x)` with a standard error when the model is simulated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SemigroupValue {
    pub value: f64,
    pub stderr: Option<f64>,
}

/// Deterministic evaluation when available, otherwise `n` simulated paths
/// from `stream`.
pub fn semigroup_apply(
    model: &MarkovModel,
    s: f64,
    f: &TestFunction,
    x: f64,
    stream: RngStream,
    n: usize,
) -> Result<SemigroupValue> {
    if model.has_deterministic_semigroup() {
        return Ok(SemigroupValue { value: model.semigroup(s, f, x)?, stderr: None });
    }
    if s == 0.0 {
        return Ok(SemigroupValue { value: f.value(x), stderr: Some(0.0) });
    }
    let (value, se) = model.semigroup_mc(s, f, x, n, stream)?;
    Ok(SemigroupValue { value, stderr: Some(se) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::FRAC_PI_2;

    #[test]
    fn eigen_decay() {
        let m = MarkovModel::eigen(0.5).unwrap();
        let v = m.semigroup(2.0, &TestFunction::Sine { mode: 1 }, FRAC_PI_2).unwrap();
        assert!((v - (-1.0f64).exp()).abs() < 1e-15);
        assert_eq!(m.generator(&TestFunction::Cosine { mode: 1 }, 0.3).unwrap(), -0.5 * 0.3f64.cos());
        assert!(MarkovModel::eigen(-1.0).is_err());
    }

    #[test]
    fn identity_at_zero() {
        let f = TestFunction::Gaussian { width: 0.7 };
        for m in
            [MarkovModel::eigen(0.3).unwrap(), MarkovModel::new(ModelKind::BrownianLine { half_width: 3.0 }).unwrap()]
        {
            assert_eq!(m.semigroup(0.0, &f, 0.4).unwrap(), f.value(0.4));
        }
        let c = TestFunction::Cosine { mode: 2 };
        assert_eq!(MarkovModel::brownian_torus().semigroup(0.0, &c, 0.4).unwrap(), c.value(0.4));
        assert!(MarkovModel::brownian_torus().semigroup(0.5, &f, 0.4).is_err());
        let jd = MarkovModel::new(ModelKind::JumpDiffusion(JumpDiffusion::ou_with_exp_jumps())).unwrap();
        let v = semigroup_apply(&jd, 0.0, &f, 0.4, RngStream::new(1, 0), 10).unwrap();
        assert_eq!(v.value, f.value(0.4));
    }

    #[test]
    fn torus_sine_is_eigenfunction() {
        let m = MarkovModel::brownian_torus();
        let f = TestFunction::Sine { mode: 1 };
        for s in [0.01, 0.5, 1.0, 3.0, 20.0] {
            let v = m.semigroup(s, &f, FRAC_PI_2).unwrap();
            assert!((v - (-0.5 * s).exp()).abs() < 1e-12, "s={s}: {v}");
        }
        assert_eq!(m.generator(&f, 0.0).unwrap(), 0.0);
        assert!((m.generator(&f, FRAC_PI_2).unwrap() + 0.5).abs() < 1e-15);
    }

    #[test]
    fn torus_generator_by_finite_differences() {
        let f = TestFunction::Sine { mode: 1 };
        let x = FRAC_PI_2;
        let h = 1e-4;
        let fd = 0.5 * (f.value(x + h) - 2.0 * f.value(x) + f.value(x - h)) / (h * h);
        assert!((fd + 0.5).abs() < 1e-6);
    }

    #[test]
    fn torus_semigroup_on_trig_polynomial() {
        let m = MarkovModel::brownian_torus();
        // cos(x)^2 = 1/2 + cos(2x)/2
        let one = TestFunction::Constant(0.5);
        let c2 = TestFunction::Cosine { mode: 2 };
        let x = 0.3;
        let direct = m.semigroup(1.5, &one, x).unwrap() + 0.5 * m.semigroup(1.5, &c2, x).unwrap();
        let expected = 0.5 + 0.5 * (-2.0f64 * 1.5).exp() * (2.0 * x).cos();
        assert!((direct - expected).abs() < 1e-12);
    }

    #[test]
    fn line_semigroup_matches_free_motion_far_from_walls() {
        let m = MarkovModel::new(ModelKind::BrownianLine { half_width: 10.0 }).unwrap();
        let f = TestFunction::Gaussian { width: 1.0 };
        // far from the walls the Dirichlet semigroup equals the free one:
        // E exp(-(x+sqrt(s)Z)^2/2) = exp(-x^2/(2(1+s))) / sqrt(1+s)
        let (s, x) = (0.8, 0.5);
        let v = m.semigroup(s, &f, x).unwrap();
        let free = (-x * x / (2.0 * (1.0 + s))).exp() / (1.0 + s).sqrt();
        assert!((v - free).abs() < 1e-10, "{v} vs {free}");
        assert_eq!(m.semigroup(s, &f, 10.0).unwrap(), 0.0);
    }

    #[test]
    fn jump_law_masses() {
        let law = JumpLaw { intensity: 2.0, rate: 1.5, max_size: 4.0, symmetric: false };
        let total = law.mass(0.0, 10.0);
        assert!((total - 2.0).abs() < 1e-14);
        let q = gauss_kronrod(|x| x * law.density(x), 0.0, 1.0, 1e-13, 1e-15).unwrap().value;
        assert!((q - law.small_mean()).abs() < 1e-12);
    }

    #[test]
    fn jump_diffusion_generator_matches_short_time_expansion() {
        // L f(x) ~ (E f(Y_h) - f(x)) / h for small h
        let jd = JumpDiffusion { step: Some(1e-4), ..JumpDiffusion::ou_with_exp_jumps() };
        let m = MarkovModel::new(ModelKind::JumpDiffusion(jd)).unwrap();
        let f = TestFunction::Gaussian { width: 1.0 };
        let x = 0.4;
        let lf = m.generator(&f, x).unwrap();
        let h = 0.01;
        let (mean, se) = m.semigroup_mc(h, &f, x, 400_000, RngStream::new(11, 0)).unwrap();
        let fd = (mean - f.value(x)) / h;
        // O(h) bias plus statistical error
        assert!((fd - lf).abs() < 4.0 * se / h + 0.05, "{fd} vs {lf} (se/h {})", se / h);
    }

    #[test]
    fn constant_is_conserved() {
        let m = MarkovModel::brownian_torus();
        assert_eq!(m.semigroup(2.3, &TestFunction::Constant(1.0), 1.1).unwrap(), 1.0);
        let jd = MarkovModel::new(ModelKind::JumpDiffusion(JumpDiffusion::ou_with_exp_jumps())).unwrap();
        let (mean, se) = jd.semigroup_mc(0.5, &TestFunction::Constant(1.0), 0.0, 1000, RngStream::new(2, 0)).unwrap();
        assert_eq!((mean, se), (1.0, 0.0));
    }
}
