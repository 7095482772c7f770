//! Structural invariants, each returning a description of the first
//! violation found.

use alloc::format;
use alloc::string::String;
use alloc::vec;

use crate::bernstein::{BernsteinChar, TailKernel};
use crate::fpde::{solve_scalar, KernelWeights};
use crate::mc::{estimate_u_curve, McSettings, Sequential};
use crate::models::{MarkovModel, TestFunction};
use crate::sampler::{sample_kill_time, InverseSample, InverseSampler, RngStream, SubordinatorPath, DOMAIN_KILL};

/// Outcome of a check: `Err` carries the violation.
pub type Check = core::result::Result<(), String>;

fn fail<E: core::fmt::Display>(e: E) -> String {
    format!("{e}")
}

/// `theta = 0` gives `u~ = 1` exactly at every step.
pub fn constant_preservation(ch: &BernsteinChar, horizon: f64, dt: f64) -> Check {
    let sol = solve_scalar(ch, 0.0, horizon, dt).map_err(fail)?;
    match sol.column(0).iter().position(|&v| v != 1.0) {
        Some(n) => Err(format!("u~ = {} at step {n}", sol.scalar(n))),
        None => Ok(()),
    }
}

/// `u~` is non-increasing and bounded by 1 for `theta > 0`.
pub fn monotone_decay(ch: &BernsteinChar, theta: f64, horizon: f64, dt: f64) -> Check {
    let u = solve_scalar(ch, theta, horizon, dt).map_err(fail)?.column(0);
    if let Some(n) = u.windows(2).position(|w| w[1] > w[0]) {
        return Err(format!("u~ increases from {} to {} at step {}", u[n], u[n + 1], n + 1));
    }
    if let Some(v) = u.iter().find(|v| v.abs() > 1.0) {
        return Err(format!("|u~| = {} exceeds 1", v.abs()));
    }
    Ok(())
}

/// Sampled subordinator paths start at 0 and never decrease, and first
/// passages along one path are non-decreasing in the level.
pub fn path_monotonicity(ch: &BernsteinChar, ds: f64, steps: usize, stream: RngStream) -> Check {
    let path = SubordinatorPath::sample(ch, ds, steps, &mut stream.rng(), &mut stream.domain(DOMAIN_KILL).rng())
        .map_err(fail)?;
    if path.values[0] != 0.0 {
        return Err(format!("path starts at {}", path.values[0]));
    }
    if let Some(j) = path.values.windows(2).position(|w| w[1] < w[0]) {
        return Err(format!("path decreases at step {}", j + 1));
    }
    let levels = [0.05, 0.2, 0.5, 1.0];
    let sampler = InverseSampler::new(ch, ds).map_err(fail)?;
    let cap = sample_kill_time(ch.kill_rate(), &mut stream.domain(DOMAIN_KILL).rng()).map_err(fail)?;
    let mut out = vec![InverseSample::default(); levels.len()];
    sampler.first_passages(&levels, cap, &mut stream.rng(), &mut out).map_err(fail)?;
    if out.windows(2).any(|w| w[1].tau < w[0].tau) {
        return Err(format!("first passages not monotone: {out:?}"));
    }
    Ok(())
}

/// Every estimate satisfies `|mean| <= M sup|f| + 3 stderr`.
pub fn uniform_bound(
    ch: &BernsteinChar,
    model: &MarkovModel,
    f: &TestFunction,
    ts: &[f64],
    x: f64,
    settings: &McSettings,
) -> Check {
    let bound = model.semigroup_bound() * f.sup_norm();
    for e in estimate_u_curve(&Sequential, ch, model, f, ts, x, settings).map_err(fail)? {
        if e.mean.abs() > bound + 3.0 * e.stderr {
            return Err(format!("|u({}, {x})| = {} > {bound} + 3 * {}", e.t, e.mean.abs(), e.stderr));
        }
    }
    Ok(())
}

/// `W_{n,j} = W_{n+1,j+1}`, `W >= 0` and rows telescoping to `G(t_n)`.
pub fn toeplitz_weights(kernel: &TailKernel, dt: f64, n_max: usize) -> Check {
    let w = KernelWeights::new(kernel, dt, n_max).map_err(fail)?;
    for n in 1..n_max {
        for j in 1..=n {
            if w.weight(n, j) != w.weight(n + 1, j + 1) || w.weight(n, j) < 0.0 {
                return Err(format!(
                    "W({n},{j}) = {} vs W({},{}) = {}",
                    w.weight(n, j),
                    n + 1,
                    j + 1,
                    w.weight(n + 1, j + 1)
                ));
            }
        }
    }
    let g = kernel.big_g(n_max as f64 * dt).map_err(fail)?;
    let sum = w.row_sum(n_max);
    if (sum - g).abs() > 1e-12 * g.max(1.0) {
        return Err(format!("row sum {sum} vs G = {g}"));
    }
    Ok(())
}

/// Second differences of `G` are non-positive on `h, 2h, ..., n h`.
pub fn g_concavity(kernel: &TailKernel, h: f64, n: usize) -> Check {
    let mut prev = [0.0, kernel.big_g(h).map_err(fail)?];
    for i in 2..=n {
        let next = kernel.big_g(i as f64 * h).map_err(fail)?;
        let second = next - 2.0 * prev[1] + prev[0];
        if second > 1e-12 * next.abs().max(1.0) {
            return Err(format!("G'' > 0 near x = {}: {second}", (i - 1) as f64 * h));
        }
        prev = [prev[1], next];
    }
    Ok(())
}

/// `(-1)^n Delta_h^n phi(lambda) <= 0` for `n = 1, 2, 3`.
pub fn phi_alternating(ch: &BernsteinChar, lambda: f64, h: f64) -> Check {
    let mut v = [0.0; 4];
    for (i, slot) in v.iter_mut().enumerate() {
        *slot = ch.phi(lambda + i as f64 * h).map_err(fail)?;
    }
    let scale = v[3].abs().max(1.0) * 1e-11;
    let d1 = v[1] - v[0];
    let d2 = v[2] - 2.0 * v[1] + v[0];
    let d3 = v[3] - 3.0 * v[2] + 3.0 * v[1] - v[0];
    if d1 < -scale || d2 > scale || d3 < -scale {
        return Err(format!("differences at lambda = {lambda}, h = {h}: {d1}, {d2}, {d3}"));
    }
    Ok(())
}
