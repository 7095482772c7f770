//! Deterministic solver for `(k d/dt + d^w/dt) u = (L - a) u + a f`,
//! `u(0) = f`.
//!
//! Time is discretized by piecewise-constant collocation through the kernel
//! integral `G(x) = int_0^x w`: with `u` constant on each cell
//! `(t_{j-1}, t_j]`,
//!
//! ```text
//! d^w u(t_n) ~ (1 / dt) sum_{j=1}^n g_{n-j} (u_j - u_{j-1}),
//! g_m = G((m + 1) dt) - G(m dt).
//! ```
//!
//! The newest cell is implicit and the history explicit. Each step solves
//! for the increment `u_n - u_{n-1}`, which keeps constants exact.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::TAU;

use nalgebra::{DMatrix, DVector};
#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;

use crate::bernstein::{BernsteinChar, TailKernel};
use crate::error::{domain, Error, Result};
use crate::models::{JumpDiffusion, MarkovModel, ModelKind, TestFunction};

/// Convolution weights `W_{n,j} = g_{n-j}` on a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelWeights {
    dt: f64,
    g: Vec<f64>,
}

impl KernelWeights {
    /// Weights for `n <= n_max`.
    pub fn new(kernel: &TailKernel, dt: f64, n_max: usize) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(domain("dt", dt));
        }
        let mut g = Vec::with_capacity(n_max);
        let mut prev = 0.0;
        for m in 1..=n_max {
            let next = kernel.big_g(m as f64 * dt)?;
            if !next.is_finite() {
                return Err(Error::Numeric { what: "kernel integral G", residual: next });
            }
            g.push(next - prev);
            prev = next;
        }
        Ok(Self { dt, g })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn len(&self) -> usize {
        self.g.len()
    }

    pub fn is_empty(&self) -> bool {
        self.g.is_empty()
    }

    /// `g_0, g_1, ...`
    pub fn lags(&self) -> &[f64] {
        &self.g
    }

    /// `W_{n,j}` for `1 <= j <= n <= len`.
    pub fn weight(&self, n: usize, j: usize) -> f64 {
        assert!(1 <= j && j <= n && n <= self.g.len(), "weight index out of range");
        self.g[n - j]
    }

    /// `sum_{j <= n} W_{n,j}`, which telescopes to `G(t_n)`.
    pub fn row_sum(&self, n: usize) -> f64 {
        self.g[..n].iter().sum()
    }

    /// Discrete `d^w u(t_n)` for grid values `u_0, ..., u_n`.
    pub fn derivative(&self, u: &[f64], n: usize) -> f64 {
        (1..=n).map(|j| self.g[n - j] * (u[j] - u[j - 1])).sum::<f64>() / self.dt
    }
}

/// [`KernelWeights::new`] under its operation name.
pub fn kernel_weights(kernel: &TailKernel, dt: f64, n_max: usize) -> Result<KernelWeights> {
    KernelWeights::new(kernel, dt, n_max)
}

/// Discrete Caputo derivative of order `beta` of samples `g(t_0), g(t_1), ...`
/// on a grid of step `dt`; entry `n - 1` approximates the derivative at
/// `t_n`.
pub fn caputo_special(beta: f64, g: &[f64], dt: f64) -> Result<Vec<f64>> {
    let kernel = TailKernel::caputo(beta)?;
    let n_max = g.len().saturating_sub(1);
    let weights = KernelWeights::new(&kernel, dt, n_max)?;
    Ok((1..=n_max).map(|n| weights.derivative(g, n)).collect())
}

/// Description of the discretization behind a [`GridSolution`].
#[derive(Debug, Clone, PartialEq)]
pub struct SchemeInfo {
    pub name: &'static str,
    /// formal order in `dt`
    pub order: u32,
    pub dx: Option<f64>,
    /// `|theta_h - theta| / theta` for trigonometric data on the periodic
    /// grid, where `theta_h` is the discrete eigenvalue
    pub eigen_mismatch: Option<f64>,
}

/// Values `u(t_n, x_m)`, stored row by row in time. Scalar solutions have
/// one column and no spatial grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSolution {
    pub dt: f64,
    pub steps: usize,
    pub x: Vec<f64>,
    values: Vec<f64>,
    pub scheme: SchemeInfo,
}

impl GridSolution {
    fn width(&self) -> usize {
        self.x.len().max(1)
    }

    pub fn is_scalar(&self) -> bool {
        self.x.is_empty()
    }

    pub fn horizon(&self) -> f64 {
        self.steps as f64 * self.dt
    }

    pub fn time(&self, n: usize) -> f64 {
        n as f64 * self.dt
    }

    pub fn row(&self, n: usize) -> &[f64] {
        let w = self.width();
        &self.values[n * w..(n + 1) * w]
    }

    /// The scalar path `u_0, ..., u_N`, or column `m` of a grid solution.
    pub fn column(&self, m: usize) -> Vec<f64> {
        let w = self.width();
        self.values.iter().skip(m).step_by(w).copied().collect()
    }

    /// `u_n` of a scalar solution.
    pub fn scalar(&self, n: usize) -> f64 {
        self.values[n * self.width()]
    }

    /// Grid index of time `t`, which must lie on the grid.
    pub fn index_of(&self, t: f64) -> Result<usize> {
        let n = (t / self.dt).round();
        if !(n >= 0.0 && n <= self.steps as f64) || (n * self.dt - t).abs() > 1e-9 * t.abs().max(1.0) {
            return Err(Error::Precondition(alloc::format!("t = {t} is not on the grid of step {}", self.dt)));
        }
        Ok(n as usize)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

fn step_count(horizon: f64, dt: f64) -> Result<usize> {
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(domain("horizon", horizon));
    }
    if !(dt > 0.0 && dt <= horizon) {
        return Err(domain("dt", dt));
    }
    Ok((horizon / dt - 1e-9).ceil() as usize)
}

fn check_theta(theta: f64) -> Result<()> {
    if !(theta >= 0.0 && theta.is_finite()) {
        return Err(domain("theta", theta));
    }
    Ok(())
}

fn scalar_solution(dt: f64, steps: usize, values: Vec<f64>) -> GridSolution {
    GridSolution {
        dt,
        steps,
        x: Vec::new(),
        values,
        scheme: SchemeInfo {
            name: "piecewise-constant convolution quadrature",
            order: 1,
            dx: None,
            eigen_mismatch: None,
        },
    }
}

/// History term `sum_{j=1}^{n-1} g_{n-j} delta_j`.
fn history(g: &[f64], delta: &[f64], n: usize) -> f64 {
    (1..n).map(|j| g[n - j] * delta[j]).sum()
}

/// Time factor `u~` of `u(t, x) = u~(t) f(x)` for an eigenfunction,
/// `L f = -theta f`: solves `k u~' + d^w u~ = -(theta + a) u~ + a`,
/// `u~(0) = 1`.
pub fn solve_scalar(ch: &BernsteinChar, theta: f64, horizon: f64, dt: f64) -> Result<GridSolution> {
    check_theta(theta)?;
    let steps = step_count(horizon, dt)?;
    let weights = KernelWeights::new(&ch.kernel(), dt, steps)?;
    let g = weights.lags();
    let a = ch.kill_rate();
    let c = (ch.drift() + g.first().copied().unwrap_or(0.0)) / dt;
    let pivot = c + theta + a;
    if !(pivot > 0.0) {
        return Err(Error::Numeric { what: "scalar step pivot", residual: pivot });
    }
    let mut u = vec![1.0; steps + 1];
    let mut delta = vec![0.0; steps + 1];
    for n in 1..=steps {
        let rhs = -(theta + a) * u[n - 1] + a - history(g, &delta, n) / dt;
        delta[n] = rhs / pivot;
        u[n] = u[n - 1] + delta[n];
    }
    Ok(scalar_solution(dt, steps, u))
}

/// [`solve_scalar`] for the unkilled equation `k u~' + d^w u~ = -theta u~`,
/// coded without the kill rate. Requires `a = 0`.
pub fn solve_scalar_unkilled(ch: &BernsteinChar, theta: f64, horizon: f64, dt: f64) -> Result<GridSolution> {
    if ch.kill_rate() != 0.0 {
        return Err(Error::Precondition("the unkilled solver needs a zero kill rate".into()));
    }
    check_theta(theta)?;
    let steps = step_count(horizon, dt)?;
    let weights = KernelWeights::new(&ch.kernel(), dt, steps)?;
    let g = weights.lags();
    let c = (ch.drift() + g.first().copied().unwrap_or(0.0)) / dt;
    let pivot = c + theta;
    if !(pivot > 0.0) {
        return Err(Error::Numeric { what: "scalar step pivot", residual: pivot });
    }
    let mut u = vec![1.0; steps + 1];
    let mut delta = vec![0.0; steps + 1];
    for n in 1..=steps {
        let rhs = -theta * u[n - 1] - history(g, &delta, n) / dt;
        delta[n] = rhs / pivot;
        u[n] = u[n - 1] + delta[n];
    }
    Ok(scalar_solution(dt, steps, u))
}

/// Boundary treatment of a [`DiscreteGenerator`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Boundary {
    Periodic,
    /// zero outside the grid
    Dirichlet,
}

/// A finite-difference generator `L_h` acting on nodal values.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteGenerator {
    pub x: Vec<f64>,
    pub dx: f64,
    pub boundary: Boundary,
    pub matrix: DMatrix<f64>,
}

/// Largest number of grid nodes accepted by the dense solver.
pub const MAX_GRID_NODES: usize = 4000;

fn node_count(length: f64, dx: f64) -> Result<usize> {
    if !(dx > 0.0 && dx.is_finite()) {
        return Err(domain("dx", dx));
    }
    let m = (length / dx).round();
    if !(m >= 4.0) || m > MAX_GRID_NODES as f64 {
        return Err(Error::Config(alloc::format!("dx = {dx} gives {m} cells; need between 4 and {MAX_GRID_NODES}")));
    }
    Ok(m as usize)
}

impl DiscreteGenerator {
    /// `1/2 d^2/dx^2` on `[0, 2 pi)` with periodic central differences.
    /// `dx` is rounded so that it divides `2 pi`.
    pub fn periodic_half_laplacian(dx: f64) -> Result<Self> {
        let m = node_count(TAU, dx)?;
        let h = TAU / m as f64;
        let d = 0.5 / (h * h);
        let mut a = DMatrix::zeros(m, m);
        for i in 0..m {
            a[(i, (i + m - 1) % m)] += d;
            a[(i, i)] -= 2.0 * d;
            a[(i, (i + 1) % m)] += d;
        }
        Ok(Self { x: (0..m).map(|i| i as f64 * h).collect(), dx: h, boundary: Boundary::Periodic, matrix: a })
    }

    /// `1/2 d^2/dx^2` on `(-half_width, half_width)` with zero boundary values.
    pub fn dirichlet_half_laplacian(half_width: f64, dx: f64) -> Result<Self> {
        let (x, h) = interior_nodes(half_width, dx)?;
        let m = x.len();
        let d = 0.5 / (h * h);
        let mut a = DMatrix::zeros(m, m);
        for i in 0..m {
            if i > 0 {
                a[(i, i - 1)] += d;
            }
            a[(i, i)] -= 2.0 * d;
            if i + 1 < m {
                a[(i, i + 1)] += d;
            }
        }
        Ok(Self { x, dx: h, boundary: Boundary::Dirichlet, matrix: a })
    }

    /// The jump-diffusion generator on `(-half_width, half_width)`, zero
    /// outside. Local terms use central differences; jumps use exact
    /// intensity masses on cells of width `dx` centred at their midpoints,
    /// with linear interpolation at the landing point.
    pub fn jump_diffusion(jd: &JumpDiffusion, half_width: f64, dx: f64) -> Result<Self> {
        jd.validate()?;
        let (x, h) = interior_nodes(half_width, dx)?;
        let m = x.len();
        let mut a = DMatrix::zeros(m, m);
        let law = jd.jumps;
        let cells = (law.max_size / h).ceil() as usize;
        let signs: &[f64] = if law.symmetric { &[1.0, -1.0] } else { &[1.0] };
        for (i, &y) in x.iter().enumerate() {
            let b = jd.effective_drift(y);
            let s = jd.diffusion.eval(y);
            let diff = 0.5 * s * s / (h * h);
            let adv = b / (2.0 * h);
            if i > 0 {
                a[(i, i - 1)] += diff - adv;
            }
            a[(i, i)] -= 2.0 * diff;
            if i + 1 < m {
                a[(i, i + 1)] += diff + adv;
            }
            for q in 0..cells {
                let mass = law.mass(q as f64 * h, (q + 1) as f64 * h);
                if mass == 0.0 {
                    continue;
                }
                let size = (q as f64 + 0.5) * h;
                let scale = if size < 1.0 { jd.small_jump_scale } else { jd.large_jump_scale };
                for &sign in signs {
                    a[(i, i)] -= mass;
                    let target = y + scale * sign * size;
                    // landing point in units of the interior grid, whose
                    // boundary neighbours at indices -1 and m hold zero
                    let pos = (target - x[0]) / h;
                    let left = pos.floor();
                    let frac = pos - left;
                    for (idx, wgt) in [(left, 1.0 - frac), (left + 1.0, frac)] {
                        if idx >= 0.0 && idx < m as f64 && wgt != 0.0 {
                            a[(i, idx as usize)] += mass * wgt;
                        }
                    }
                }
            }
        }
        Ok(Self { x, dx: h, boundary: Boundary::Dirichlet, matrix: a })
    }

    /// Generator for `model` with spacing `dx`. `half_width` sets the
    /// truncated domain of the jump-diffusion.
    pub fn for_model(model: &MarkovModel, dx: f64, half_width: f64) -> Result<Self> {
        match model.kind() {
            ModelKind::BrownianTorus => Self::periodic_half_laplacian(dx),
            ModelKind::BrownianLine { half_width } => Self::dirichlet_half_laplacian(*half_width, dx),
            ModelKind::JumpDiffusion(jd) => Self::jump_diffusion(jd, half_width, dx),
            ModelKind::Eigen { .. } => {
                Err(Error::Config("the eigen model has no state space; use the scalar solver".into()))
            }
        }
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// Discrete eigenvalue `theta_h = (1 - cos(n dx)) / dx^2` of mode `n` on
    /// the periodic grid.
    pub fn periodic_eigenvalue(&self, mode: u32) -> Option<f64> {
        (self.boundary == Boundary::Periodic).then(|| {
            let h = self.dx;
            2.0 * (0.5 * mode as f64 * h).sin().powi(2) / (h * h)
        })
    }
}

fn interior_nodes(half_width: f64, dx: f64) -> Result<(Vec<f64>, f64)> {
    if !(half_width > 0.0 && half_width.is_finite()) {
        return Err(domain("half_width", half_width));
    }
    let m = node_count(2.0 * half_width, dx)?;
    let h = 2.0 * half_width / m as f64;
    Ok(((1..m).map(|j| -half_width + j as f64 * h).collect(), h))
}

fn grid_solve(
    ch: &BernsteinChar,
    generator: &DiscreteGenerator,
    f: &TestFunction,
    horizon: f64,
    dt: f64,
    killed: bool,
) -> Result<GridSolution> {
    f.validate()?;
    if generator.boundary == Boundary::Periodic && matches!(f, TestFunction::Gaussian { .. }) {
        return Err(Error::Config("a periodic grid needs a periodic test function".into()));
    }
    let steps = step_count(horizon, dt)?;
    let weights = KernelWeights::new(&ch.kernel(), dt, steps)?;
    let g = weights.lags();
    let a = if killed { ch.kill_rate() } else { 0.0 };
    let c = (ch.drift() + g.first().copied().unwrap_or(0.0)) / dt;
    let m = generator.len();
    let l = &generator.matrix;
    let shift = if killed { c + a } else { c };
    let system = DMatrix::from_diagonal_element(m, m, shift) - l;
    let lu = system.lu();
    if !lu.is_invertible() {
        return Err(Error::Numeric { what: "grid step matrix is singular", residual: shift });
    }
    let f0 = DVector::from_iterator(m, generator.x.iter().map(|&x| f.value(x)));
    let mut values = Vec::with_capacity((steps + 1) * m);
    values.extend(f0.iter());
    let mut deltas: Vec<DVector<f64>> = Vec::with_capacity(steps + 1);
    deltas.push(DVector::zeros(m));
    let mut u = f0.clone();
    let mut hist = DVector::zeros(m);
    for n in 1..=steps {
        hist.fill(0.0);
        for j in 1..n {
            hist.axpy(g[n - j], &deltas[j], 1.0);
        }
        let rhs = if killed { l * &u - &u * a + &f0 * a - &hist / dt } else { l * &u - &hist / dt };
        let delta = lu.solve(&rhs).ok_or(Error::Numeric { what: "grid step solve", residual: f64::NAN })?;
        u += &delta;
        if u.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric { what: "non-finite grid value", residual: f64::NAN });
        }
        values.extend(u.iter());
        deltas.push(delta);
    }
    let eigen_mismatch = match (*f, generator.boundary) {
        (TestFunction::Sine { mode } | TestFunction::Cosine { mode }, Boundary::Periodic) if mode > 0 => {
            let exact = 0.5 * (mode * mode) as f64;
            generator.periodic_eigenvalue(mode).map(|h| (h - exact).abs() / exact)
        }
        _ => None,
    };
    Ok(GridSolution {
        dt,
        steps,
        x: generator.x.clone(),
        values,
        scheme: SchemeInfo {
            name: "piecewise-constant convolution quadrature, central differences",
            order: 1,
            dx: Some(generator.dx),
            eigen_mismatch,
        },
    })
}

/// Solves the equation on the grid of `generator`.
pub fn solve_grid_1d(
    ch: &BernsteinChar,
    generator: &DiscreteGenerator,
    f: &TestFunction,
    horizon: f64,
    dt: f64,
) -> Result<GridSolution> {
    grid_solve(ch, generator, f, horizon, dt, true)
}

/// [`solve_grid_1d`] for `k d/dt u + d^w u = L u`, coded without the kill
/// rate. Requires `a = 0`.
pub fn solve_grid_1d_unkilled(
    ch: &BernsteinChar,
    generator: &DiscreteGenerator,
    f: &TestFunction,
    horizon: f64,
    dt: f64,
) -> Result<GridSolution> {
    if ch.kill_rate() != 0.0 {
        return Err(Error::Precondition("the unkilled solver needs a zero kill rate".into()));
    }
    grid_solve(ch, generator, f, horizon, dt, false)
}

/// Linear interpolation of a grid solution row at `x`.
pub fn interpolate_row(sol: &GridSolution, n: usize, x: f64) -> Result<f64> {
    let xs = &sol.x;
    let row = sol.row(n);
    if xs.len() < 2 {
        return Err(Error::Precondition("interpolation needs a spatial grid".into()));
    }
    let h = xs[1] - xs[0];
    let pos = (x - xs[0]) / h;
    if !(pos >= 0.0 && pos <= (xs.len() - 1) as f64) {
        return Err(domain("x", x));
    }
    let i = (pos.floor() as usize).min(xs.len() - 2);
    let frac = pos - i as f64;
    Ok(row[i] * (1.0 - frac) + row[i + 1] * frac)
}

/// `phi(lambda) / (lambda (phi(lambda) + theta))`, the Laplace transform of
/// the eigen time factor.
pub fn laplace_oracle(ch: &BernsteinChar, theta: f64, lambda: f64) -> Result<f64> {
    if !(lambda > 0.0) {
        return Err(domain("lambda", lambda));
    }
    let phi = ch.phi(lambda)?;
    Ok(phi / (lambda * (phi + theta)))
}

/// Truncation level `e^{-lambda T}` accepted by [`laplace_check`].
pub const LAPLACE_TRUNCATION: f64 = 1e-8;

/// One Laplace-domain comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct LaplaceResidual {
    pub lambda: f64,
    pub numeric: f64,
    pub oracle: f64,
    pub residual: f64,
}

/// Trapezoid Laplace transform of a scalar solution compared against
/// [`laplace_oracle`].
pub fn laplace_check(
    sol: &GridSolution,
    ch: &BernsteinChar,
    theta: f64,
    lambdas: &[f64],
) -> Result<Vec<LaplaceResidual>> {
    if !sol.is_scalar() {
        return Err(Error::Precondition("the Laplace check needs a scalar solution".into()));
    }
    let horizon = sol.horizon();
    let mut out = Vec::with_capacity(lambdas.len());
    for &lambda in lambdas {
        if !(lambda > 0.0) {
            return Err(domain("lambda", lambda));
        }
        if (-lambda * horizon).exp() > LAPLACE_TRUNCATION {
            return Err(Error::Precondition(alloc::format!(
                "horizon {horizon} too short for lambda = {lambda}: need lambda T >= {:.3}",
                -LAPLACE_TRUNCATION.ln()
            )));
        }
        let dt = sol.dt;
        let n = sol.steps;
        let mut sum = 0.5 * (sol.scalar(0) + (-lambda * horizon).exp() * sol.scalar(n));
        for i in 1..n {
            sum += (-lambda * i as f64 * dt).exp() * sol.scalar(i);
        }
        let numeric = sum * dt;
        let oracle = laplace_oracle(ch, theta, lambda)?;
        out.push(LaplaceResidual { lambda, numeric, oracle, residual: (numeric - oracle).abs() });
    }
    Ok(out)
}

/// `max |u(t_n, x_m)|` over the whole solution.
pub fn sup_norm(sol: &GridSolution) -> f64 {
    sol.values.iter().fold(0.0, |acc: f64, v| acc.max(v.abs()))
}

/// Human-readable summary of a solution's scheme.
pub fn describe(sol: &GridSolution) -> String {
    match sol.scheme.dx {
        Some(dx) => alloc::format!("{} (dt = {}, dx = {dx}, steps = {})", sol.scheme.name, sol.dt, sol.steps),
        None => alloc::format!("{} (dt = {}, steps = {})", sol.scheme.name, sol.dt, sol.steps),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bernstein::LevyMeasure;
    use crate::special::{gamma, mittag_leffler};

    fn stable(a: f64, k: f64, beta: f64) -> BernsteinChar {
        BernsteinChar::new(a, k, LevyMeasure::stable(beta).unwrap()).unwrap()
    }

    #[test]
    fn weights_telescope_and_first_value() {
        let kernel = TailKernel::caputo(0.5).unwrap();
        let w = KernelWeights::new(&kernel, 0.1, 50).unwrap();
        assert!((w.weight(1, 1) - 0.356_825).abs() < 1e-6);
        for n in [1, 7, 50] {
            let g = kernel.big_g(n as f64 * 0.1).unwrap();
            assert!((w.row_sum(n) - g).abs() < 1e-12);
        }
        assert_eq!(w.weight(5, 2), w.weight(6, 3));
        assert_eq!(w.derivative(&[2.0; 10], 9), 0.0);
    }

    #[test]
    fn caputo_of_linear_function() {
        let dt = 1e-3;
        let g: Vec<f64> = (0..=1000).map(|i| i as f64 * dt).collect();
        let d = caputo_special(0.5, &g, dt).unwrap();
        assert!((d[999] - 2.0 / core::f64::consts::PI.sqrt()).abs() < 2e-2);
        let d = caputo_special(0.99, &g, dt).unwrap();
        assert!((d[999] - 1.0).abs() < 5e-2);
        assert!(caputo_special(1.0, &g, dt).is_err());
        let expected = 1.0 / gamma(1.5);
        assert!((caputo_special(0.5, &g, dt).unwrap()[999] - expected).abs() < 1e-10);
    }

    #[test]
    fn constant_solution_for_zero_theta() {
        for ch in [stable(0.0, 0.0, 0.5), stable(2.0, 0.5, 0.3)] {
            let sol = solve_scalar(&ch, 0.0, 1.0, 1e-2).unwrap();
            assert!(sol.column(0).iter().all(|&v| v == 1.0));
        }
    }

    #[test]
    fn pure_ode_limit() {
        let ch = BernsteinChar::new(0.0, 1.0, LevyMeasure::Null).unwrap();
        let sol = solve_scalar(&ch, 1.0, 1.0, 1e-3).unwrap();
        let err = (0..=sol.steps).map(|n| (sol.scalar(n) - (-sol.time(n)).exp()).abs()).fold(0.0, f64::max);
        assert!(err < 1e-3, "{err}");
    }

    #[test]
    fn mittag_leffler_limit() {
        let sol = solve_scalar(&stable(0.0, 0.0, 0.5), 0.5, 1.0, 1e-3).unwrap();
        let exact = mittag_leffler(0.5, -0.5).unwrap();
        assert!((sol.scalar(sol.steps) - exact).abs() < 5e-3);
    }

    #[test]
    fn unkilled_twin_is_bit_identical() {
        let ch = stable(0.0, 0.3, 0.5);
        let a = solve_scalar(&ch, 0.5, 1.0, 1e-2).unwrap();
        let b = solve_scalar_unkilled(&ch, 0.5, 1.0, 1e-2).unwrap();
        assert!(a.values().iter().zip(b.values()).all(|(x, y)| x.to_bits() == y.to_bits()));
        assert!(solve_scalar_unkilled(&stable(1.0, 0.0, 0.5), 0.5, 1.0, 1e-2).is_err());
    }

    #[test]
    fn grid_sine_follows_scalar_solution() {
        let ch = stable(1.0, 0.2, 0.5);
        let gen = DiscreteGenerator::periodic_half_laplacian(0.1).unwrap();
        let f = TestFunction::Sine { mode: 1 };
        let grid = solve_grid_1d(&ch, &gen, &f, 0.5, 1e-2).unwrap();
        let theta_h = gen.periodic_eigenvalue(1).unwrap();
        let scalar = solve_scalar(&ch, theta_h, 0.5, 1e-2).unwrap();
        let mut dev: f64 = 0.0;
        for n in 0..=grid.steps {
            for (m, &x) in gen.x.iter().enumerate() {
                dev = dev.max((grid.row(n)[m] - scalar.scalar(n) * x.sin()).abs());
            }
        }
        assert!(dev < 1e-10, "{dev}");
        assert!(grid.scheme.eigen_mismatch.unwrap() < 1e-3);
    }

    #[test]
    fn grid_constant_is_exact() {
        let ch = stable(1.5, 0.0, 0.5);
        let gen = DiscreteGenerator::periodic_half_laplacian(0.2).unwrap();
        let sol = solve_grid_1d(&ch, &gen, &TestFunction::Constant(1.0), 0.3, 1e-2).unwrap();
        assert!(sol.values().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn jump_generator_matches_model_generator() {
        let jd = JumpDiffusion::ou_with_exp_jumps();
        let model = MarkovModel::new(ModelKind::JumpDiffusion(jd)).unwrap();
        let gen = DiscreteGenerator::jump_diffusion(&jd, 10.0, 0.02).unwrap();
        let f = TestFunction::Gaussian { width: 1.0 };
        let fv = DVector::from_iterator(gen.len(), gen.x.iter().map(|&x| f.value(x)));
        let lf = &gen.matrix * fv;
        for (i, &x) in gen.x.iter().enumerate() {
            if x.abs() < 2.0 {
                let exact = model.generator(&f, x).unwrap();
                assert!((lf[i] - exact).abs() < 5e-3, "x={x}: {} vs {exact}", lf[i]);
            }
        }
    }

    #[test]
    fn laplace_of_constant_and_exponential() {
        let ch = stable(1.0, 0.0, 0.5);
        let sol = solve_scalar(&ch, 0.0, 5.0, 1e-3).unwrap();
        let r = laplace_check(&sol, &ch, 0.0, &[10.0]).unwrap();
        assert!(r[0].residual < 1e-6, "{:?}", r);
        assert!(laplace_check(&sol, &ch, 0.0, &[1.0]).is_err());
        let ode = BernsteinChar::new(0.0, 1.0, LevyMeasure::Null).unwrap();
        let sol = solve_scalar(&ode, 1.0, 5.0, 1e-3).unwrap();
        let r = laplace_check(&sol, &ode, 1.0, &[10.0]).unwrap();
        assert!((r[0].oracle - 1.0 / 11.0).abs() < 1e-15);
        assert!(r[0].residual < 1e-4, "{:?}", r);
    }
}
