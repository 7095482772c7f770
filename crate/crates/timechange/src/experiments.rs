//! The validation suites behind `run`.

use std::time::Instant;

use serde_json::{json, Map, Value};
use timechange_core::bernstein::LevyMeasure;
use timechange_core::fpde::{
    interpolate_row, laplace_check, solve_grid_1d, solve_grid_1d_unkilled, solve_scalar, solve_scalar_unkilled,
    DiscreteGenerator, GridSolution,
};
use timechange_core::mc::{estimate_u_curve, estimate_u_curve_unkilled, Executor, McEstimate, BLOCK_SIZE};
use timechange_core::models::ModelKind;
use timechange_core::sampler::{
    cdf_inverse_killed, crossing_integral_mc, derive_seed, driftless_tail_mc, sample_inverse_killed, RngStream,
    DOMAIN_KILL, DOMAIN_ORACLE,
};
use timechange_core::special::mittag_leffler;
use timechange_core::stats::{dkw_epsilon, empirical_cdf};
use timechange_core::Error as CoreError;

use crate::config::{ExperimentConfig, ExperimentKind, Resolved};
use crate::error::{context, CliError};
use crate::output::{estimates_csv, fmt_f64, table_csv, Artifact, Outcome};
use crate::plot::{Figure, Series};
use crate::report::{Record, ValidationReport};

/// Runs the experiment described by `cfg`.
pub fn run_experiment<E: Executor + Sync>(cfg: &ExperimentConfig, exec: &E) -> Result<Outcome, CliError> {
    let r = cfg.resolve()?;
    let started = Instant::now();
    let mut outcome = match cfg.kind {
        ExperimentKind::McVsPde => mc_vs_pde(cfg, &r, exec),
        ExperimentKind::CdfCheck => cdf_check(cfg, &r, exec),
        ExperimentKind::JumpCrossing => jump_crossing(cfg, &r, exec),
        ExperimentKind::Convergence => convergence(cfg, &r, exec),
        ExperimentKind::LaplaceCheck => laplace(cfg, &r),
        ExperimentKind::ReductionA0 => reduction(cfg, &r, exec),
    }?;
    outcome.metadata.insert("wall_time".into(), json!(started.elapsed().as_secs_f64()));
    outcome.metadata.insert("version".into(), json!(env!("CARGO_PKG_VERSION")));
    Ok(outcome)
}

/// `E_beta(-theta t^beta)` when the configuration is the plain stable
/// eigenproblem, which has this closed form.
pub fn mittag_leffler_factor(r: &Resolved) -> Option<impl Fn(f64) -> Result<f64, CliError>> {
    let beta = match r.ch.measure() {
        LevyMeasure::Stable { beta } => *beta,
        _ => return None,
    };
    let theta = match r.model.kind() {
        ModelKind::Eigen { theta } => *theta,
        _ => return None,
    };
    (r.ch.kill_rate() == 0.0 && r.ch.drift() == 0.0)
        .then_some(move |t: f64| mittag_leffler(beta, -theta * t.powf(beta)).map_err(context("Mittag-Leffler oracle")))
}

/// Deterministic solution on the configured grid.
pub enum Deterministic {
    /// Time factor `u~`, with `u(t, x) = u~(t) f(x)`.
    Scalar {
        sol: GridSolution,
        factor: f64,
    },
    Grid(GridSolution),
}

impl Deterministic {
    pub fn solve(cfg: &ExperimentConfig, r: &Resolved, horizon: f64, unkilled: bool) -> Result<Self, CliError> {
        let n = &cfg.numerics;
        match r.model.kind() {
            ModelKind::Eigen { theta } => {
                let solve = if unkilled { solve_scalar_unkilled } else { solve_scalar };
                let sol = solve(&r.ch, *theta, horizon, n.dt).map_err(context("scalar solver"))?;
                Ok(Self::Scalar { sol, factor: r.f.value(n.x) })
            }
            _ => {
                let gen = DiscreteGenerator::for_model(&r.model, n.dx, n.domain_half_width)
                    .map_err(context("discrete generator"))?;
                let solve = if unkilled { solve_grid_1d_unkilled } else { solve_grid_1d };
                let sol = solve(&r.ch, &gen, &r.f, horizon, n.dt).map_err(context("grid solver"))?;
                Ok(Self::Grid(sol))
            }
        }
    }

    pub fn solution(&self) -> &GridSolution {
        match self {
            Self::Scalar { sol, .. } | Self::Grid(sol) => sol,
        }
    }

    pub fn at_step(&self, n: usize, x: f64) -> Result<f64, CliError> {
        match self {
            Self::Scalar { sol, factor } => Ok(sol.scalar(n) * factor),
            Self::Grid(sol) => interpolate_row(sol, n, x).map_err(context("interpolation")),
        }
    }

    pub fn at(&self, t: f64, x: f64) -> Result<f64, CliError> {
        let n = self.solution().index_of(t).map_err(context("solution lookup"))?;
        self.at_step(n, x)
    }

    /// `(t_n, u(t_n, x))` over every step.
    pub fn curve(&self, x: f64) -> Result<Vec<(f64, f64)>, CliError> {
        let sol = self.solution();
        (0..=sol.steps).map(|n| Ok((sol.time(n), self.at_step(n, x)?))).collect()
    }

    /// `solution.csv`: `t,value` for the scalar factor at every step, or
    /// `t,x,value` at `t = 0` and the requested times.
    pub fn csv(&self, times: &[f64]) -> Result<Vec<u8>, CliError> {
        match self {
            Self::Scalar { sol, .. } => {
                table_csv(&["t", "value"], (0..=sol.steps).map(|n| vec![fmt_f64(sol.time(n)), fmt_f64(sol.scalar(n))]))
            }
            Self::Grid(sol) => {
                let mut rows = Vec::new();
                for &t in std::iter::once(&0.0).chain(times) {
                    let n = sol.index_of(t).map_err(context("solution lookup"))?;
                    for (x, v) in sol.x.iter().zip(sol.row(n)) {
                        rows.push(vec![fmt_f64(sol.time(n)), fmt_f64(*x), fmt_f64(*v)]);
                    }
                }
                table_csv(&["t", "x", "value"], rows)
            }
        }
    }

    pub fn metadata(&self) -> Value {
        let sol = self.solution();
        json!({
            "scheme": sol.scheme.name,
            "order": sol.scheme.order,
            "dt": sol.dt,
            "dx": sol.scheme.dx,
            "steps": sol.steps,
            "nodes": sol.x.len(),
            "eigen_mismatch": sol.scheme.eigen_mismatch,
        })
    }
}

fn seconds(since: Instant) -> f64 {
    since.elapsed().as_secs_f64()
}

fn horizon(cfg: &ExperimentConfig) -> f64 {
    *cfg.numerics.times.last().expect("validated time grid")
}

fn estimate_metadata(cfg: &ExperimentConfig, est: &[McEstimate], seconds: f64) -> Value {
    json!({
        "samples": cfg.numerics.samples,
        "mode": est.first().map(|e| e.mode.name()),
        "block_size": BLOCK_SIZE,
        "ds": cfg.numerics.ds,
        "seconds": seconds,
    })
}

fn mc_vs_pde<E: Executor>(cfg: &ExperimentConfig, r: &Resolved, exec: &E) -> Result<Outcome, CliError> {
    let n = &cfg.numerics;
    let clock = Instant::now();
    let est = estimate_u_curve(exec, &r.ch, &r.model, &r.f, &n.times, n.x, &r.settings)
        .map_err(context("Monte Carlo estimate"))?;
    let mc_seconds = seconds(clock);
    let clock = Instant::now();
    let det = Deterministic::solve(cfg, r, horizon(cfg), false)?;
    let solve_seconds = seconds(clock);
    let share = (mc_seconds + solve_seconds) / est.len() as f64;

    let mut records = Vec::new();
    for e in &est {
        let tol = n.sigmas * e.stderr + n.dt_multiplier * n.dt + n.abs_tolerance;
        records.push(Record::compare(format!("mc vs solver, t = {}", e.t), e.mean, det.at(e.t, n.x)?, tol, share));
    }
    if let Some(ml) = mittag_leffler_factor(r) {
        let fx = r.f.value(n.x);
        for e in &est {
            let oracle = ml(e.t)? * fx;
            records.push(Record::compare(
                format!("solver vs Mittag-Leffler, t = {}", e.t),
                det.at(e.t, n.x)?,
                oracle,
                n.solver_tolerance,
                solve_seconds,
            ));
            records.push(Record::compare(
                format!("mc vs Mittag-Leffler, t = {}", e.t),
                e.mean,
                oracle,
                n.sigmas * e.stderr,
                mc_seconds / est.len() as f64,
            ));
        }
    }

    let plot = Figure::new(format!("u(t, x = {}) under {}", n.x, r.model.name()), "t", "u")
        .series(Series::line("solver", det.curve(n.x)?))
        .series(
            Series::points(format!("Monte Carlo ({} sigma)", n.sigmas), est.iter().map(|e| (e.t, e.mean)).collect())
                .with_errors(est.iter().map(|e| n.sigmas * e.stderr).collect()),
        )
        .render();
    let mut metadata = Map::new();
    metadata.insert("solver".into(), det.metadata());
    metadata.insert("estimator".into(), estimate_metadata(cfg, &est, mc_seconds));
    Ok(Outcome {
        report: ValidationReport::new(records),
        artifacts: vec![
            Artifact::new("estimates.csv", estimates_csv(&est)?),
            Artifact::new("solution.csv", det.csv(&n.times)?),
            Artifact::new("plot.svg", plot.into_bytes()),
        ],
        metadata,
    })
}

/// Sorted draws of the killed inverse at time `s`, block `b` on stream `b`.
pub fn killed_inverse_draws<E: Executor>(cfg: &ExperimentConfig, r: &Resolved, exec: &E) -> Result<Vec<f64>, CliError> {
    let n = &cfg.numerics;
    let total = n.samples;
    let blocks = total.div_ceil(BLOCK_SIZE);
    let chunks = exec.map(blocks, |b| -> Result<Vec<f64>, CoreError> {
        let len = BLOCK_SIZE.min(total - b * BLOCK_SIZE);
        let stream = RngStream::new(cfg.seed, b as u64);
        let (mut clock, mut kill) = (stream.rng(), stream.domain(DOMAIN_KILL).rng());
        (0..len).map(|_| sample_inverse_killed(&r.ch, n.s, n.ds, &mut clock, &mut kill).map(|e| e.tau)).collect()
    });
    let mut draws = Vec::with_capacity(total);
    for c in chunks {
        draws.extend(c.map_err(context("killed inverse sampler"))?);
    }
    draws.sort_by(f64::total_cmp);
    Ok(draws)
}

fn cdf_check<E: Executor>(cfg: &ExperimentConfig, r: &Resolved, exec: &E) -> Result<Outcome, CliError> {
    let n = &cfg.numerics;
    if n.s.is_nan() || n.s <= 0.0 {
        return Err(CliError::field("numerics.s", "cdf-check needs s > 0"));
    }
    let clock = Instant::now();
    let draws = killed_inverse_draws(cfg, r, exec)?;
    let share = seconds(clock) / n.r_values.len() as f64;
    let eps = dkw_epsilon(n.samples, n.alpha / 2.0);

    let mut records = Vec::new();
    let mut rows = Vec::new();
    for (i, &rv) in n.r_values.iter().enumerate() {
        let clock = Instant::now();
        let mut rng = RngStream::new(cfg.seed, i as u64).domain(DOMAIN_ORACLE).rng();
        let mut oracle_error = None;
        let mut oracle_used = false;
        let formula = cdf_inverse_killed(&r.ch, n.s, rv, |rr, level| {
            match driftless_tail_mc(r.ch.measure(), rr, level, n.samples, &mut rng) {
                Ok((p, _)) => {
                    oracle_used = true;
                    p
                }
                Err(e) => {
                    oracle_error = Some(e);
                    f64::NAN
                }
            }
        });
        if let Some(e) = oracle_error {
            return Err(context("tail oracle")(e));
        }
        let formula = formula.map_err(context("killed CDF"))?;
        // the oracle error enters the formula damped by exp(-a r)
        let band = eps + if oracle_used { (-r.ch.kill_rate() * rv).exp() * eps } else { 0.0 };
        let empirical = empirical_cdf(&draws, rv);
        records.push(Record::compare(format!("cdf at r = {rv}"), empirical, formula, band, share + seconds(clock)));
        rows.push(vec![fmt_f64(rv), fmt_f64(empirical), fmt_f64(formula), fmt_f64(band)]);
    }

    let r_max = 1.5 * n.r_values.iter().copied().fold(0.0, f64::max);
    let curve = (0..=200).map(|i| {
        let x = r_max * i as f64 / 200.0;
        (x, empirical_cdf(&draws, x))
    });
    let plot = Figure::new(format!("P(E_s^S <= r), s = {}", n.s), "r", "CDF")
        .series(Series::line("empirical", curve.collect()))
        .series(
            Series::points("formula", records.iter().zip(&n.r_values).map(|(rec, &rv)| (rv, rec.oracle)).collect())
                .with_errors(records.iter().map(|rec| rec.tolerance).collect()),
        )
        .render();
    let mut metadata = Map::new();
    metadata.insert("samples".into(), json!(n.samples));
    metadata.insert("dkw_alpha_per_source".into(), json!(n.alpha / 2.0));
    Ok(Outcome {
        report: ValidationReport::new(records),
        artifacts: vec![
            Artifact::new("cdf.csv", table_csv(&["r", "empirical", "formula", "band"], rows)?),
            Artifact::new("plot.svg", plot.into_bytes()),
        ],
        metadata,
    })
}

fn jump_crossing<E: Executor>(cfg: &ExperimentConfig, r: &Resolved, exec: &E) -> Result<Outcome, CliError> {
    let n = &cfg.numerics;
    let measure = r.ch.measure();
    let results = exec.map(n.pairs.len(), |i| -> Result<[f64; 5], CoreError> {
        let clock = Instant::now();
        let [rv, t] = n.pairs[i];
        let mut rng = RngStream::new(cfg.seed, i as u64).domain(DOMAIN_ORACLE).rng();
        let (lhs, lhs_se) = driftless_tail_mc(measure, rv, t, n.samples, &mut rng)?;
        let (rhs, rhs_se) =
            crossing_integral_mc(measure, rv, t, n.outer_nodes, n.samples_per_node, derive_seed(cfg.seed, i as u64))?;
        Ok([lhs, lhs_se, rhs, rhs_se, seconds(clock)])
    });
    let mut records = Vec::new();
    let mut rows = Vec::new();
    let mut values = Vec::new();
    for (res, &[rv, t]) in results.into_iter().zip(&n.pairs) {
        let [lhs, lhs_se, rhs, rhs_se, secs] = res.map_err(context("jump-crossing identity"))?;
        let tol = n.sigmas * lhs_se.hypot(rhs_se);
        records.push(Record::compare(format!("tail vs crossing integral, r = {rv}, t = {t}"), lhs, rhs, tol, secs));
        rows.push([rv, t, lhs, lhs_se, rhs, rhs_se].iter().map(|&v| fmt_f64(v)).collect());
        values.push((lhs, lhs_se, rhs, rhs_se));
    }
    let index = |i: usize, shift: f64| i as f64 + 1.0 + shift;
    let plot = Figure::new("P(D_r >= t) two ways", "pair", "probability")
        .series(
            Series::points("direct", values.iter().enumerate().map(|(i, v)| (index(i, -0.05), v.0)).collect())
                .with_errors(values.iter().map(|v| n.sigmas * v.1).collect()),
        )
        .series(
            Series::points(
                "crossing integral",
                values.iter().enumerate().map(|(i, v)| (index(i, 0.05), v.2)).collect(),
            )
            .with_errors(values.iter().map(|v| n.sigmas * v.3).collect()),
        )
        .render();
    let mut metadata = Map::new();
    metadata.insert("outer_nodes".into(), json!(n.outer_nodes));
    metadata.insert("samples_per_node".into(), json!(n.samples_per_node));
    Ok(Outcome {
        report: ValidationReport::new(records),
        artifacts: vec![
            Artifact::new(
                "crossing.csv",
                table_csv(&["r", "t", "direct", "direct_stderr", "integral", "integral_stderr"], rows)?,
            ),
            Artifact::new("plot.svg", plot.into_bytes()),
        ],
        metadata,
    })
}

fn convergence<E: Executor>(cfg: &ExperimentConfig, r: &Resolved, exec: &E) -> Result<Outcome, CliError> {
    let n = &cfg.numerics;
    let theta = cfg.theta()?;
    let t = horizon(cfg);
    let solves = exec.map(n.dt_levels.len(), |i| -> Result<(f64, f64), CoreError> {
        let clock = Instant::now();
        let sol = solve_scalar(&r.ch, theta, t, n.dt_levels[i])?;
        Ok((sol.scalar(sol.steps), seconds(clock)))
    });
    let mut values = Vec::new();
    let mut times = Vec::new();
    for s in solves {
        let (v, secs) = s.map_err(context("scalar solver"))?;
        values.push(v);
        times.push(secs);
    }
    let [lo, hi] = n.ratio_range;
    let mut records = Vec::new();
    // errors against the closed form when there is one, otherwise
    // differences of successive levels, which shrink at the same rate
    let (errors, kind) = match mittag_leffler_factor(r) {
        Some(ml) => {
            let exact = ml(t)?;
            let last = values.len() - 1;
            records.push(Record::compare(
                format!("solver vs Mittag-Leffler, dt = {}", n.dt_levels[last]),
                values[last],
                exact,
                n.solver_tolerance,
                times[last],
            ));
            (values.iter().map(|v| (v - exact).abs()).collect::<Vec<_>>(), "error")
        }
        None => (values.windows(2).map(|w| (w[0] - w[1]).abs()).collect(), "difference"),
    };
    for (i, w) in errors.windows(2).enumerate() {
        records.push(Record::within(
            format!("{kind} ratio, dt = {} / {}", n.dt_levels[i], n.dt_levels[i + 1]),
            w[0] / w[1],
            lo,
            hi,
            times[i] + times[i + 1],
        ));
    }
    let rows = n
        .dt_levels
        .iter()
        .zip(&values)
        .enumerate()
        .map(|(i, (h, v))| vec![fmt_f64(*h), fmt_f64(*v), errors.get(i).map_or(String::new(), |e| fmt_f64(*e))]);
    let plot = Figure::new(format!("{kind} of u~({t}) under halving of dt"), "dt", kind)
        .log_log()
        .series(Series::points(kind, n.dt_levels.iter().copied().zip(errors.iter().copied()).collect()))
        .render();
    let mut metadata = Map::new();
    metadata.insert("reference".into(), json!(if kind == "error" { "mittag-leffler" } else { "successive levels" }));
    metadata.insert("t".into(), json!(t));
    Ok(Outcome {
        report: ValidationReport::new(records),
        artifacts: vec![
            Artifact::new("convergence.csv", table_csv(&["dt", "value", kind], rows)?),
            Artifact::new("plot.svg", plot.into_bytes()),
        ],
        metadata,
    })
}

fn laplace(cfg: &ExperimentConfig, r: &Resolved) -> Result<Outcome, CliError> {
    let n = &cfg.numerics;
    let theta = cfg.theta()?;
    let clock = Instant::now();
    let sol = solve_scalar(&r.ch, theta, n.horizon, n.dt).map_err(context("scalar solver"))?;
    let res = laplace_check(&sol, &r.ch, theta, &n.lambdas).map_err(context("Laplace check"))?;
    let share = seconds(clock) / res.len() as f64;
    let records = res
        .iter()
        .map(|l| {
            Record::compare(
                format!("Laplace transform, lambda = {}", l.lambda),
                l.numeric,
                l.oracle,
                n.solver_tolerance,
                share,
            )
        })
        .collect();
    let rows = res.iter().map(|l| vec![fmt_f64(l.lambda), fmt_f64(l.numeric), fmt_f64(l.oracle), fmt_f64(l.residual)]);
    let det = Deterministic::Scalar { sol, factor: 1.0 };
    let plot = Figure::new(format!("u~(t), theta = {theta}"), "t", "u~")
        .series(Series::line("solver", det.curve(0.0)?))
        .render();
    let mut metadata = Map::new();
    metadata.insert("solver".into(), det.metadata());
    Ok(Outcome {
        report: ValidationReport::new(records),
        artifacts: vec![
            Artifact::new("laplace.csv", table_csv(&["lambda", "numeric", "oracle", "residual"], rows)?),
            Artifact::new("solution.csv", det.csv(&[])?),
            Artifact::new("plot.svg", plot.into_bytes()),
        ],
        metadata,
    })
}

fn bit_mismatches(a: &[f64], b: &[f64]) -> usize {
    a.len().abs_diff(b.len()) + a.iter().zip(b).filter(|(x, y)| x.to_bits() != y.to_bits()).count()
}

fn reduction<E: Executor>(cfg: &ExperimentConfig, r: &Resolved, exec: &E) -> Result<Outcome, CliError> {
    let n = &cfg.numerics;
    let clock = Instant::now();
    let killed = estimate_u_curve(exec, &r.ch, &r.model, &r.f, &n.times, n.x, &r.settings)
        .map_err(context("killed estimate"))?;
    let unkilled = estimate_u_curve_unkilled(exec, &r.ch, &r.model, &r.f, &n.times, n.x, &r.settings)
        .map_err(context("unkilled estimate"))?;
    let mc_seconds = seconds(clock);
    let mut records = Vec::new();
    for (k, u) in killed.iter().zip(&unkilled) {
        let mismatches = bit_mismatches(&[k.mean, k.stderr], &[u.mean, u.stderr]);
        records.push(Record::identical(
            format!("estimate bits, t = {}", k.t),
            mismatches,
            mc_seconds / killed.len() as f64,
        ));
    }
    let killed_csv = estimates_csv(&killed)?;
    let unkilled_csv = estimates_csv(&unkilled)?;
    records.push(Record::identical("estimates.csv bytes", usize::from(killed_csv != unkilled_csv), 0.0));

    let clock = Instant::now();
    let det = Deterministic::solve(cfg, r, horizon(cfg), false)?;
    let twin = Deterministic::solve(cfg, r, horizon(cfg), true)?;
    records.push(Record::identical(
        "solver bits",
        bit_mismatches(det.solution().values(), twin.solution().values()),
        seconds(clock),
    ));
    let solution = det.csv(&n.times)?;
    let twin_solution = twin.csv(&n.times)?;
    records.push(Record::identical("solution.csv bytes", usize::from(solution != twin_solution), 0.0));

    let plot = Figure::new(format!("u(t, x = {}) with a = 0", n.x), "t", "u")
        .series(Series::line("killed solver", det.curve(n.x)?))
        .series(Series::points("killed estimate", killed.iter().map(|e| (e.t, e.mean)).collect()))
        .series(Series::points("unkilled estimate", unkilled.iter().map(|e| (e.t, e.mean)).collect()))
        .render();
    let mut metadata = Map::new();
    metadata.insert("solver".into(), det.metadata());
    metadata.insert("estimator".into(), estimate_metadata(cfg, &killed, mc_seconds));
    Ok(Outcome {
        report: ValidationReport::new(records),
        artifacts: vec![
            Artifact::new("estimates.csv", killed_csv),
            Artifact::new("estimates_unkilled.csv", unkilled_csv),
            Artifact::new("solution.csv", solution),
            Artifact::new("solution_unkilled.csv", twin_solution),
            Artifact::new("plot.svg", plot.into_bytes()),
        ],
        metadata,
    })
}
