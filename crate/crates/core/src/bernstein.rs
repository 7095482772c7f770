//! Bernstein functions through their characteristics `(a, k, mu)`.
//!
//! `phi(lambda) = a + k lambda + int (1 - e^{-lambda z}) mu(dz)`, with `a` the
//! kill rate, `k` the drift and `mu` a Levy measure on `(0, inf)`. The tail
//! `w(z) = mu((z, inf))` is the memory kernel of the generalized Caputo
//! derivative and `G(x) = int_0^x w` is its running integral.

use alloc::vec::Vec;

#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;

use crate::error::{domain, Error, Result};
use crate::quadrature::{self, GaussLegendre};
use crate::special::{exp_integral_e1, gamma};

/// Relative tolerance for quadratures of the Levy measure.
pub const QUAD_REL_TOL: f64 = 1e-9;

/// A point mass of the order measure of a distributed-order kernel: a stable
/// component of index `beta` with weight `weight`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrderAtom {
    pub beta: f64,
    pub weight: f64,
}

/// Levy measure families with closed-form tails, plus a tabulated tail.
#[derive(Debug, Clone, PartialEq)]
pub enum LevyMeasure {
    /// The zero measure (pure drift subordinator).
    Null,
    /// `mu(dz) = beta z^{-1-beta} / Gamma(1-beta) dz`, so that `phi_0 = lambda^beta`.
    Stable {
        beta: f64,
    },
    /// `mu(dz) = shape e^{-rate z} / z dz`.
    Gamma {
        shape: f64,
        rate: f64,
    },
    /// Weighted sum of stable measures.
    DistributedOrder(Vec<OrderAtom>),
    /// Compound Poisson with `intensity` jumps per unit time, sizes `Exp(rate)`.
    ExpJumps {
        intensity: f64,
        rate: f64,
    },
    Tabulated(TabulatedTail),
}

fn positive(what: &'static str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(domain(what, v))
    }
}

fn stable_index(v: f64) -> Result<()> {
    if v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        Err(domain("beta", v))
    }
}

impl LevyMeasure {
    pub fn stable(beta: f64) -> Result<Self> {
        stable_index(beta)?;
        Ok(Self::Stable { beta })
    }

    pub fn gamma(shape: f64, rate: f64) -> Result<Self> {
        positive("shape", shape)?;
        positive("rate", rate)?;
        Ok(Self::Gamma { shape, rate })
    }

    pub fn exp_jumps(intensity: f64, rate: f64) -> Result<Self> {
        positive("intensity", intensity)?;
        positive("rate", rate)?;
        Ok(Self::ExpJumps { intensity, rate })
    }

    pub fn distributed_order(atoms: Vec<OrderAtom>) -> Result<Self> {
        let m = Self::DistributedOrder(atoms);
        m.validate()?;
        Ok(m)
    }

    pub fn tabulated(points: &[(f64, f64)]) -> Result<Self> {
        Ok(Self::Tabulated(TabulatedTail::new(points)?))
    }

    /// Checks parameter ranges. Constructors call this; it is public for
    /// values built directly from the enum variants.
    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Null => Ok(()),
            Self::Stable { beta } => stable_index(*beta),
            Self::Gamma { shape, rate } => positive("shape", *shape).and(positive("rate", *rate)),
            Self::ExpJumps { intensity, rate } => positive("intensity", *intensity).and(positive("rate", *rate)),
            Self::DistributedOrder(atoms) => {
                if atoms.is_empty() {
                    return Err(Error::Config("distributed-order measure needs at least one atom".into()));
                }
                for atom in atoms {
                    stable_index(atom.beta)?;
                    positive("weight", atom.weight)?;
                }
                Ok(())
            }
            Self::Tabulated(_) => Ok(()),
        }
    }

    /// Short family name as used in configuration files.
    pub fn family_name(&self) -> &'static str {
        match self {
            Self::Null => "null",
            Self::Stable { .. } => "stable",
            Self::Gamma { .. } => "gamma",
            Self::DistributedOrder(_) => "distributed-order",
            Self::ExpJumps { .. } => "exp-jumps",
            Self::Tabulated(_) => "tabulated",
        }
    }

    pub fn is_null(&self) -> bool {
        matches!(self, Self::Null)
    }

    /// True iff `mu((0, inf)) = inf`.
    pub fn is_infinite_activity(&self) -> bool {
        match self {
            Self::Null | Self::ExpJumps { .. } => false,
            Self::Stable { .. } | Self::Gamma { .. } | Self::DistributedOrder(_) => true,
            Self::Tabulated(t) => t.head_exponent > 0.0,
        }
    }

    /// True when tail, tail integral and Laplace exponent are available in
    /// closed form.
    pub fn is_closed_form(&self) -> bool {
        !matches!(self, Self::Tabulated(_))
    }

    /// `w(z) = mu((z, inf))` for `z > 0`.
    pub fn tail(&self, z: f64) -> Result<f64> {
        if !(z > 0.0) {
            return Err(domain("z", z));
        }
        Ok(match self {
            Self::Null => 0.0,
            Self::Stable { beta } => stable_tail(*beta, z),
            Self::Gamma { shape, rate } => shape * exp_integral_e1(rate * z)?,
            Self::DistributedOrder(atoms) => atoms.iter().map(|a| a.weight * stable_tail(a.beta, z)).sum(),
            Self::ExpJumps { intensity, rate } => intensity * (-rate * z).exp(),
            Self::Tabulated(t) => t.tail(z),
        })
    }

    /// `G(x) = int_0^x w(t) dt` for `x >= 0`.
    pub fn tail_integral(&self, x: f64) -> Result<f64> {
        if !(x >= 0.0) {
            return Err(domain("x", x));
        }
        if x == 0.0 {
            return Ok(0.0);
        }
        Ok(match self {
            Self::Null => 0.0,
            Self::Stable { beta } => stable_tail_integral(*beta, x),
            Self::Gamma { shape, rate } => shape * (x * exp_integral_e1(rate * x)? - (-rate * x).exp_m1() / rate),
            Self::DistributedOrder(atoms) => atoms.iter().map(|a| a.weight * stable_tail_integral(a.beta, x)).sum(),
            Self::ExpJumps { intensity, rate } => -intensity / rate * (-rate * x).exp_m1(),
            Self::Tabulated(t) => t.tail_integral(x),
        })
    }

    /// `int (1 - e^{-lambda z}) mu(dz)`, the driftless Laplace exponent.
    pub fn laplace_exponent(&self, lambda: f64) -> Result<f64> {
        if !(lambda > 0.0) {
            return Err(domain("lambda", lambda));
        }
        Ok(match self {
            Self::Null => 0.0,
            Self::Stable { beta } => lambda.powf(*beta),
            Self::Gamma { shape, rate } => shape * (lambda / rate).ln_1p(),
            Self::DistributedOrder(atoms) => atoms.iter().map(|a| a.weight * lambda.powf(a.beta)).sum(),
            Self::ExpJumps { intensity, rate } => intensity * lambda / (rate + lambda),
            Self::Tabulated(t) => t.laplace_exponent(lambda)?,
        })
    }

    /// `int_0^eps z mu(dz) = G(eps) - eps w(eps)`: mean contribution of jumps
    /// no larger than `eps` per unit time.
    pub fn small_jump_mean(&self, eps: f64) -> Result<f64> {
        Ok((self.tail_integral(eps)? - eps * self.tail(eps)?).max(0.0))
    }

    /// `int_0^inf e^{-lambda s} w(s) ds` by quadrature of the tail, split at
    /// `s = 1` (and at the grid nodes of a tabulated tail).
    pub fn tail_laplace_quadrature(&self, lambda: f64) -> Result<f64> {
        if !(lambda > 0.0) {
            return Err(domain("lambda", lambda));
        }
        if let Self::Tabulated(t) = self {
            return t.tail_laplace_quadrature(lambda);
        }
        if self.is_null() {
            return Ok(0.0);
        }
        let mut failure = None;
        let mut integrand = |s: f64| match self.tail(s) {
            Ok(w) => (-lambda * s).exp() * w,
            Err(e) => {
                failure.get_or_insert(e);
                0.0
            }
        };
        let head = quadrature::tanh_sinh(&mut integrand, 0.0, 1.0, QUAD_REL_TOL)?;
        let rest = quadrature::exp_sinh(&mut integrand, 1.0, QUAD_REL_TOL)?;
        match failure {
            Some(e) => Err(e),
            None => Ok(head.value + rest.value),
        }
    }
}

fn stable_tail(beta: f64, z: f64) -> f64 {
    z.powf(-beta) / gamma(1.0 - beta)
}

fn stable_tail_integral(beta: f64, x: f64) -> f64 {
    x.powf(1.0 - beta) / gamma(2.0 - beta)
}

/// A tail `w` given on a grid of `(z, w(z))` pairs.
///
/// Between nodes `w` is linear in `ln z`; below the first node it continues as
/// the power law through the first two nodes; at and beyond the last node it
/// is zero, so the measure carries an atom of mass `w_last` at `z_last`.
#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedTail {
    z: Vec<f64>,
    ln_z: Vec<f64>,
    w: Vec<f64>,
    /// slope of `w` against `ln z` on each cell
    slope: Vec<f64>,
    /// `G` at each node
    cumulative: Vec<f64>,
    /// `w(z) = w_0 (z / z_0)^{-p}` below the first node
    head_exponent: f64,
}

const TAB_GL_HIGH: usize = 24;
const TAB_GL_LOW: usize = 12;

impl TabulatedTail {
    pub fn new(points: &[(f64, f64)]) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::Config("tabulated tail needs at least two points".into()));
        }
        for (i, &(z, w)) in points.iter().enumerate() {
            if !(z > 0.0 && z.is_finite()) {
                return Err(domain("z", z));
            }
            if !(w >= 0.0 && w.is_finite()) {
                return Err(domain("w", w));
            }
            if i > 0 {
                let (zp, wp) = points[i - 1];
                if z <= zp {
                    return Err(Error::Config("tabulated z grid must be strictly increasing".into()));
                }
                if w > wp {
                    return Err(Error::Config("tabulated tail must be non-increasing".into()));
                }
            }
        }
        let z: Vec<f64> = points.iter().map(|p| p.0).collect();
        let w: Vec<f64> = points.iter().map(|p| p.1).collect();
        if w[0] <= 0.0 {
            return Err(Error::Config("tabulated tail is identically zero".into()));
        }
        let ln_z: Vec<f64> = z.iter().map(|v| v.ln()).collect();
        let slope: Vec<f64> = (0..z.len() - 1).map(|i| (w[i + 1] - w[i]) / (ln_z[i + 1] - ln_z[i])).collect();
        let head_exponent = if w[1] > 0.0 { (w[0] / w[1]).ln() / (ln_z[1] - ln_z[0]) } else { 0.0 };
        if head_exponent >= 1.0 {
            // int_0 w would diverge, so int (1 ^ z) mu(dz) is infinite
            return Err(Error::Config(alloc::format!(
                "tabulated tail grows like z^-{head_exponent} at the origin; exponent must be < 1"
            )));
        }
        let mut cumulative = Vec::with_capacity(z.len());
        cumulative.push(w[0] * z[0] / (1.0 - head_exponent));
        for i in 0..z.len() - 1 {
            let prev = cumulative[i];
            cumulative.push(prev + cell_integral(z[i], w[i], slope[i], z[i + 1]));
        }
        Ok(Self { z, ln_z, w, slope, cumulative, head_exponent })
    }

    pub fn points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.z.iter().copied().zip(self.w.iter().copied())
    }

    pub fn head_exponent(&self) -> f64 {
        self.head_exponent
    }

    fn cell_of(&self, z: f64) -> usize {
        // index i with z_i <= z < z_{i+1}
        self.z.partition_point(|&v| v <= z) - 1
    }

    fn tail(&self, z: f64) -> f64 {
        let last = self.z.len() - 1;
        if z < self.z[0] {
            self.w[0] * (z / self.z[0]).powf(-self.head_exponent)
        } else if z >= self.z[last] {
            0.0
        } else {
            let i = self.cell_of(z);
            (self.w[i] + self.slope[i] * (z.ln() - self.ln_z[i])).max(0.0)
        }
    }

    fn tail_integral(&self, x: f64) -> f64 {
        let last = self.z.len() - 1;
        if x < self.z[0] {
            let p = self.head_exponent;
            self.w[0] * self.z[0].powf(p) * x.powf(1.0 - p) / (1.0 - p)
        } else if x >= self.z[last] {
            self.cumulative[last]
        } else {
            let i = self.cell_of(x);
            self.cumulative[i] + cell_integral(self.z[i], self.w[i], self.slope[i], x)
        }
    }

    /// Smallest `z` with `w(z) <= level`, for `level > 0`; inverts the tail
    /// when sampling jump sizes.
    pub(crate) fn inverse_tail(&self, level: f64) -> f64 {
        let last = self.z.len() - 1;
        if level >= self.w[0] {
            let p = self.head_exponent;
            if p == 0.0 {
                return self.z[0];
            }
            return self.z[0] * (self.w[0] / level).powf(1.0 / p);
        }
        if level <= self.w[last] {
            return self.z[last];
        }
        // w is non-increasing: find the cell with w_{i+1} <= level < w_i
        let i = self.w.partition_point(|&v| v > level) - 1;
        let s = self.slope[i];
        if s == 0.0 {
            return self.z[i + 1];
        }
        (self.ln_z[i] + (level - self.w[i]) / s).exp().clamp(self.z[i], self.z[i + 1])
    }

    fn head_laplace_exponent(&self, lambda: f64) -> f64 {
        // int_0^{z_0} (1 - e^{-lambda z}) mu(dz), integrated by parts into
        // w_0 [x e^{-x} S(x) - (1 - e^{-x})] with x = lambda z_0 and
        // S(x) = sum_n x^n / prod_{j=0}^n (j + 1 - p), a series of positive terms
        let p = self.head_exponent;
        if p == 0.0 {
            return 0.0;
        }
        let x = lambda * self.z[0];
        let mut term = 1.0 / (1.0 - p);
        let mut series = term;
        for n in 1..100_000 {
            term *= x / (n as f64 + 1.0 - p);
            series += term;
            if term < 1e-17 * series {
                break;
            }
        }
        self.w[0] * (x * (-x).exp() * series + (-x).exp_m1())
    }

    fn cells_laplace_exponent(&self, lambda: f64, rule: &GaussLegendre) -> f64 {
        // in u = ln z each cell contributes -slope * int (1 - e^{-lambda e^u}) du
        (0..self.slope.len())
            .map(|i| {
                let s = self.slope[i];
                if s == 0.0 {
                    0.0
                } else {
                    -s * rule.integrate(|u| -(-lambda * u.exp()).exp_m1(), self.ln_z[i], self.ln_z[i + 1])
                }
            })
            .sum()
    }

    fn laplace_exponent(&self, lambda: f64) -> Result<f64> {
        let last = self.z.len() - 1;
        let head = self.head_laplace_exponent(lambda);
        let atom = -(-lambda * self.z[last]).exp_m1() * self.w[last];
        let high = self.cells_laplace_exponent(lambda, &GaussLegendre::new(TAB_GL_HIGH));
        let low = self.cells_laplace_exponent(lambda, &GaussLegendre::new(TAB_GL_LOW));
        let value = head + high + atom;
        let residual = (high - low).abs();
        if residual > QUAD_REL_TOL * value.abs().max(1e-300) {
            return Err(Error::Numeric { what: "tabulated laplace exponent", residual });
        }
        Ok(value)
    }

    fn tail_laplace_quadrature(&self, lambda: f64) -> Result<f64> {
        let mut total =
            quadrature::tanh_sinh(|s| (-lambda * s).exp() * self.tail(s), 0.0, self.z[0], QUAD_REL_TOL)?.value;
        for i in 0..self.z.len() - 1 {
            let (lo, hi) = (self.z[i], self.z[i + 1]);
            let (wi, si, li) = (self.w[i], self.slope[i], self.ln_z[i]);
            total += quadrature::gauss_kronrod(
                |s| (-lambda * s).exp() * (wi + si * (s.ln() - li)),
                lo,
                hi,
                QUAD_REL_TOL,
                1e-15,
            )?
            .value;
        }
        Ok(total)
    }
}

fn cell_integral(z_lo: f64, w_lo: f64, slope: f64, x: f64) -> f64 {
    // int_{z_lo}^x (w_lo + slope ln(z / z_lo)) dz
    w_lo * (x - z_lo) + slope * (x * (x / z_lo).ln() - x + z_lo)
}

/// The kernel pair `(w, G)` derived from a Levy measure.
#[derive(Debug, Clone, PartialEq)]
pub struct TailKernel {
    measure: LevyMeasure,
}

impl TailKernel {
    pub fn new(measure: &LevyMeasure) -> Self {
        Self { measure: measure.clone() }
    }

    /// Caputo kernel `z^{-beta} / Gamma(1 - beta)`.
    pub fn caputo(beta: f64) -> Result<Self> {
        Ok(Self { measure: LevyMeasure::stable(beta)? })
    }

    pub fn measure(&self) -> &LevyMeasure {
        &self.measure
    }

    pub fn is_closed_form(&self) -> bool {
        self.measure.is_closed_form()
    }

    pub fn w(&self, z: f64) -> Result<f64> {
        self.measure.tail(z)
    }

    pub fn big_g(&self, x: f64) -> Result<f64> {
        self.measure.tail_integral(x)
    }
}

/// Characteristics `(a, k, mu)` of a Bernstein function.
#[derive(Debug, Clone, PartialEq)]
pub struct BernsteinChar {
    kill_rate: f64,
    drift: f64,
    measure: LevyMeasure,
}

impl BernsteinChar {
    pub fn new(kill_rate: f64, drift: f64, measure: LevyMeasure) -> Result<Self> {
        if !(kill_rate >= 0.0 && kill_rate.is_finite()) {
            return Err(domain("a", kill_rate));
        }
        if !(drift >= 0.0 && drift.is_finite()) {
            return Err(domain("k", drift));
        }
        measure.validate()?;
        if kill_rate == 0.0 && drift == 0.0 && measure.is_null() {
            return Err(Error::Config("phi vanishes identically: need a > 0, k > 0 or a non-zero measure".into()));
        }
        Ok(Self { kill_rate, drift, measure })
    }

    /// Same drift and measure with a different kill rate.
    pub fn with_kill_rate(&self, kill_rate: f64) -> Result<Self> {
        Self::new(kill_rate, self.drift, self.measure.clone())
    }

    pub fn kill_rate(&self) -> f64 {
        self.kill_rate
    }

    pub fn drift(&self) -> f64 {
        self.drift
    }

    pub fn measure(&self) -> &LevyMeasure {
        &self.measure
    }

    pub fn kernel(&self) -> TailKernel {
        TailKernel::new(&self.measure)
    }

    /// `phi(lambda) = a + k lambda + int (1 - e^{-lambda z}) mu(dz)`.
    pub fn phi(&self, lambda: f64) -> Result<f64> {
        Ok(self.kill_rate + self.drift * lambda + self.measure.laplace_exponent(lambda)?)
    }

    /// Laplace exponent of the unkilled subordinator, `phi(lambda) - a`.
    pub fn phi_unkilled(&self, lambda: f64) -> Result<f64> {
        Ok(self.drift * lambda + self.measure.laplace_exponent(lambda)?)
    }

    /// `|phi(lambda) - (a + k lambda + lambda int e^{-lambda s} w(s) ds)|`
    /// with the tail transform computed by quadrature.
    pub fn parts_residual(&self, lambda: f64) -> Result<f64> {
        let direct = self.phi(lambda)?;
        let by_parts = self.kill_rate + self.drift * lambda + lambda * self.measure.tail_laplace_quadrature(lambda)?;
        Ok((direct - by_parts).abs())
    }
}
