//! Special functions used by kernels and oracles.

#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;

use crate::error::{domain, Error, Result};

pub fn gamma(x: f64) -> f64 {
    libm::tgamma(x)
}

pub fn ln_gamma(x: f64) -> f64 {
    libm::lgamma(x)
}

pub fn erf(x: f64) -> f64 {
    libm::erf(x)
}

pub fn erfc(x: f64) -> f64 {
    libm::erfc(x)
}

/// One-parameter Mittag-Leffler function `E_beta(z) = sum z^n / Gamma(beta n + 1)`
/// by direct summation.
///
/// Fails when cancellation between terms would leave fewer than about six
/// correct digits, which for negative `z` happens once `|z|^(1/beta)` exceeds
/// roughly 20.
pub fn mittag_leffler(beta: f64, z: f64) -> Result<f64> {
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(domain("beta", beta));
    }
    if !z.is_finite() {
        return Err(domain("z", z));
    }
    if z == 0.0 {
        return Ok(1.0);
    }
    let ln_abs = z.abs().ln();
    let negative = z < 0.0;
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    let mut largest = 0.0f64;
    let mut quiet = 0;
    for n in 0..20_000u32 {
        let nf = n as f64;
        let magnitude = (nf * ln_abs - ln_gamma(beta * nf + 1.0)).exp();
        let term = if negative && n % 2 == 1 { -magnitude } else { magnitude };
        largest = largest.max(magnitude);
        // Kahan summation
        let y = term - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
        if magnitude <= f64::EPSILON * 1e-3 * sum.abs().max(1e-300) && nf * beta > 2.0 {
            quiet += 1;
            if quiet >= 3 {
                let lost = largest * f64::EPSILON / sum.abs().max(f64::MIN_POSITIVE);
                if lost > 1e-6 {
                    return Err(Error::Numeric { what: "mittag_leffler", residual: lost });
                }
                return Ok(sum);
            }
        } else {
            quiet = 0;
        }
    }
    Err(Error::Numeric { what: "mittag_leffler", residual: f64::INFINITY })
}

/// Exponential integral `E1(x) = int_x^inf e^-t / t dt` for `x > 0`.
pub fn exp_integral_e1(x: f64) -> Result<f64> {
    const EULER: f64 = 0.577_215_664_901_532_9;
    if !(x > 0.0) {
        return Err(domain("x", x));
    }
    if x > 745.0 {
        // below the smallest subnormal
        return Ok(0.0);
    }
    if x <= 1.0 {
        let mut sum = 0.0;
        let mut term = 1.0;
        for k in 1..200 {
            let kf = k as f64;
            term *= -x / kf;
            let add = term / kf;
            sum += add;
            if add.abs() < 1e-17 * sum.abs() {
                break;
            }
        }
        Ok(-EULER - x.ln() - sum)
    } else {
        // modified Lentz on the continued fraction
        let tiny = 1e-300;
        let mut b = x + 1.0;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..10_000 {
            let an = -((i * i) as f64);
            b += 2.0;
            d = 1.0 / (an * d + b);
            c = b + an / c;
            let del = c * d;
            h *= del;
            if (del - 1.0).abs() < 1e-16 {
                return Ok(h * (-x).exp());
            }
        }
        Err(Error::Numeric { what: "exp_integral_e1", residual: f64::NAN })
    }
}
