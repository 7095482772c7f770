//! Experiment configuration: a single TOML file per experiment.
//!
//! Every field has an explicit default, and the resolved configuration is
//! echoed into each report so that a run can be repeated from its output.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_PI_2;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use timechange_core::bernstein::{BernsteinChar, LevyMeasure, OrderAtom};
use timechange_core::mc::{McSettings, Mode, MIN_SAMPLES};
use timechange_core::models::{Affine, JumpDiffusion, JumpLaw, MarkovModel, ModelKind, TestFunction};
use timechange_core::Error as CoreError;

use crate::error::CliError;

/// The validation suites.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    /// Monte Carlo `u(t, x)` against the deterministic solver.
    McVsPde,
    /// Empirical CDF of the killed inverse against the closed form.
    CdfCheck,
    /// Tail probability against its jump-crossing integral.
    JumpCrossing,
    /// Observed order of the time scheme.
    Convergence,
    /// Laplace transform of the scalar solution against `phi / (lambda (phi + theta))`.
    LaplaceCheck,
    /// Killed pipeline at `a = 0` against the unkilled pipeline, bit for bit.
    ReductionA0,
}

impl ExperimentKind {
    pub const ALL: [Self; 6] =
        [Self::McVsPde, Self::CdfCheck, Self::JumpCrossing, Self::Convergence, Self::LaplaceCheck, Self::ReductionA0];

    pub fn name(&self) -> &'static str {
        match self {
            Self::McVsPde => "mc-vs-pde",
            Self::CdfCheck => "cdf-check",
            Self::JumpCrossing => "jump-crossing",
            Self::Convergence => "convergence",
            Self::LaplaceCheck => "laplace-check",
            Self::ReductionA0 => "reduction-a0",
        }
    }

    pub fn description(&self) -> &'static str {
        match self {
            Self::McVsPde => "Monte Carlo u(t, x) against the deterministic solver",
            Self::CdfCheck => "empirical CDF of the killed inverse subordinator against the closed form",
            Self::JumpCrossing => "P(D_r >= t) against its jump-crossing integral",
            Self::Convergence => "observed order of the time scheme under halving of dt",
            Self::LaplaceCheck => "Laplace transform of the eigen time factor against its resolvent formula",
            Self::ReductionA0 => "killed pipeline at a = 0 against the unkilled pipeline, bit for bit",
        }
    }

    /// Whether the kind draws Monte Carlo estimates of `u`.
    pub fn uses_estimator(&self) -> bool {
        matches!(self, Self::McVsPde | Self::ReductionA0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    pub bernstein: BernsteinSpec,
    #[serde(default)]
    pub model: ModelSpec,
    #[serde(default)]
    pub function: FunctionSpec,
    #[serde(default)]
    pub numerics: Numerics,
    /// Dotted field paths mapped to the values a sweep takes.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub sweep: BTreeMap<String, Vec<toml::Value>>,
}

fn default_seed() -> u64 {
    1
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BernsteinSpec {
    #[serde(default)]
    pub kill_rate: f64,
    #[serde(default)]
    pub drift: f64,
    pub measure: MeasureSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum MeasureSpec {
    Stable {
        beta: f64,
    },
    Gamma {
        shape: f64,
        rate: f64,
    },
    DistributedOrder {
        betas: Vec<f64>,
        weights: Vec<f64>,
    },
    ExpJumps {
        intensity: f64,
        rate: f64,
    },
    /// Tail values `tail[i] = mu((z[i], inf))` on an increasing grid.
    Tabulated {
        z: Vec<f64>,
        tail: Vec<f64>,
    },
    None,
}

impl MeasureSpec {
    /// Family names with their parameters, for `list-families`.
    pub const FAMILIES: [(&'static str, &'static str); 6] = [
        ("stable", "beta in (0, 1)"),
        ("gamma", "shape > 0, rate > 0"),
        ("distributed-order", "betas in (0, 1), weights > 0"),
        ("exp-jumps", "intensity > 0, rate > 0 (finite activity)"),
        ("tabulated", "z increasing > 0, tail non-increasing > 0"),
        ("none", "pure drift"),
    ];
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ModelSpec {
    Eigen { theta: f64 },
    BrownianTorus,
    BrownianLine { half_width: f64 },
    JumpDiffusion(JumpDiffusionSpec),
}

impl Default for ModelSpec {
    fn default() -> Self {
        Self::Eigen { theta: 0.5 }
    }
}

impl ModelSpec {
    pub const KINDS: [(&'static str, &'static str); 4] = [
        ("eigen", "T_s f = exp(-theta s) f; theta >= 0"),
        ("brownian-torus", "half-Laplacian on [0, 2 pi)"),
        ("brownian-line", "half-Laplacian on (-half_width, half_width), killed at the walls"),
        ("jump-diffusion", "affine drift and diffusion with truncated exponential jumps"),
    ];
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AffineSpec {
    pub constant: f64,
    pub slope: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JumpLawSpec {
    pub intensity: f64,
    pub rate: f64,
    pub max_size: f64,
    #[serde(default)]
    pub symmetric: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct JumpDiffusionSpec {
    pub small_jump_scale: f64,
    pub large_jump_scale: f64,
    pub euler_step: f64,
    pub drift: AffineSpec,
    pub diffusion: AffineSpec,
    pub jumps: JumpLawSpec,
}

impl Default for JumpDiffusionSpec {
    fn default() -> Self {
        let jd = JumpDiffusion::ou_with_exp_jumps();
        Self {
            small_jump_scale: jd.small_jump_scale,
            large_jump_scale: jd.large_jump_scale,
            euler_step: 1e-3,
            drift: AffineSpec { constant: jd.drift.constant, slope: jd.drift.slope },
            diffusion: AffineSpec { constant: jd.diffusion.constant, slope: jd.diffusion.slope },
            jumps: JumpLawSpec {
                intensity: jd.jumps.intensity,
                rate: jd.jumps.rate,
                max_size: jd.jumps.max_size,
                symmetric: jd.jumps.symmetric,
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum FunctionSpec {
    Constant { value: f64 },
    Sine { mode: u32 },
    Cosine { mode: u32 },
    Gaussian { width: f64 },
}

impl Default for FunctionSpec {
    fn default() -> Self {
        Self::Sine { mode: 1 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModeSpec {
    Conditional,
    Pathwise,
}

impl From<ModeSpec> for Mode {
    fn from(m: ModeSpec) -> Self {
        match m {
            ModeSpec::Conditional => Mode::Conditional,
            ModeSpec::Pathwise => Mode::Pathwise,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Numerics {
    pub times: Vec<f64>,
    pub x: f64,
    pub samples: usize,
    pub mode: ModeSpec,
    pub ds: f64,
    pub dt: f64,
    pub dx: f64,
    pub domain_half_width: f64,
    pub sigmas: f64,
    pub dt_multiplier: f64,
    pub abs_tolerance: f64,
    pub solver_tolerance: f64,
    pub horizon: f64,
    pub lambdas: Vec<f64>,
    pub s: f64,
    pub r_values: Vec<f64>,
    pub alpha: f64,
    pub pairs: Vec<[f64; 2]>,
    pub outer_nodes: usize,
    pub samples_per_node: usize,
    pub dt_levels: Vec<f64>,
    pub ratio_range: [f64; 2],
    pub allow_finite_activity: bool,
}

impl Default for Numerics {
    fn default() -> Self {
        Self {
            times: vec![0.25, 0.5, 1.0],
            x: FRAC_PI_2,
            samples: 100_000,
            mode: ModeSpec::Conditional,
            ds: 1e-3,
            dt: 1e-3,
            dx: 0.05,
            domain_half_width: 8.0,
            sigmas: 3.0,
            dt_multiplier: 10.0,
            abs_tolerance: 0.0,
            solver_tolerance: 5e-3,
            horizon: 5.0,
            lambdas: vec![5.0, 10.0, 20.0],
            s: 1.0,
            r_values: vec![0.1, 0.5, 1.0],
            alpha: 0.01,
            pairs: vec![[1.0, 1.0], [0.5, 2.0]],
            outer_nodes: 64,
            samples_per_node: 20_000,
            dt_levels: vec![4e-3, 2e-3, 1e-3],
            ratio_range: [1.7, 2.3],
            allow_finite_activity: false,
        }
    }
}

/// Core objects built from a validated configuration.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub ch: BernsteinChar,
    pub model: MarkovModel,
    pub f: TestFunction,
    pub settings: McSettings,
}

/// Reads a configuration file into a TOML tree.
pub fn load_value(path: &Path) -> Result<toml::Value, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::usage(format!("cannot read config {}: {e}", path.display())))?;
    parse_value(&text)
}

pub fn parse_value(text: &str) -> Result<toml::Value, CliError> {
    text.parse::<toml::Table>().map(toml::Value::Table).map_err(|e| CliError::usage(format!("config syntax: {e}")))
}

impl ExperimentConfig {
    /// Deserializes and validates, reporting the offending field path.
    pub fn from_value(value: toml::Value) -> Result<Self, CliError> {
        let cfg: Self = serde_path_to_error::deserialize(value).map_err(|e| {
            let path = e.path().to_string();
            let msg = e.inner().message().to_string();
            if path == "." {
                CliError::usage(format!("config: {msg}"))
            } else {
                CliError::field(&path, msg)
            }
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        Self::from_value(parse_value(text)?)
    }

    /// The resolved configuration as TOML, defaults included.
    pub fn to_toml(&self) -> Result<String, CliError> {
        toml::to_string(self).map_err(|e| CliError::Serialize { what: "config", message: e.to_string() })
    }

    /// Semantic checks beyond the schema.
    pub fn validate(&self) -> Result<(), CliError> {
        self.resolve().map(|_| ())
    }

    /// Builds the core objects, checking every referenced parameter.
    pub fn resolve(&self) -> Result<Resolved, CliError> {
        let b = &self.bernstein;
        nonnegative("bernstein.kill_rate", b.kill_rate)?;
        nonnegative("bernstein.drift", b.drift)?;
        let measure = self.measure()?;
        let ch = BernsteinChar::new(b.kill_rate, b.drift, measure).map_err(in_section("bernstein"))?;
        let model = self.markov_model()?;
        let f = self.test_function();
        f.validate().map_err(in_section("function"))?;
        model.check_function(&f).map_err(|e| CliError::field("function.kind", e))?;
        self.check_numerics()?;
        self.check_kind(&ch)?;
        let n = &self.numerics;
        let settings = McSettings::new(n.samples, self.seed)
            .mode(n.mode.into())
            .step(n.ds)
            .allow_finite_activity(n.allow_finite_activity);
        Ok(Resolved { ch, model, f, settings })
    }

    fn measure(&self) -> Result<LevyMeasure, CliError> {
        let section = in_section("bernstein.measure");
        match &self.bernstein.measure {
            MeasureSpec::Stable { beta } => LevyMeasure::stable(*beta).map_err(section),
            MeasureSpec::Gamma { shape, rate } => LevyMeasure::gamma(*shape, *rate).map_err(section),
            MeasureSpec::ExpJumps { intensity, rate } => LevyMeasure::exp_jumps(*intensity, *rate).map_err(section),
            MeasureSpec::DistributedOrder { betas, weights } => {
                if betas.len() != weights.len() {
                    return Err(CliError::field(
                        "bernstein.measure.weights",
                        format!("{} weights for {} betas", weights.len(), betas.len()),
                    ));
                }
                let atoms = betas.iter().zip(weights).map(|(&beta, &weight)| OrderAtom { beta, weight }).collect();
                LevyMeasure::distributed_order(atoms).map_err(section)
            }
            MeasureSpec::Tabulated { z, tail } => {
                if z.len() != tail.len() {
                    return Err(CliError::field(
                        "bernstein.measure.tail",
                        format!("{} tail values for {} abscissae", tail.len(), z.len()),
                    ));
                }
                let points: Vec<(f64, f64)> = z.iter().copied().zip(tail.iter().copied()).collect();
                LevyMeasure::tabulated(&points).map_err(section)
            }
            MeasureSpec::None => Ok(LevyMeasure::Null),
        }
    }

    pub fn markov_model(&self) -> Result<MarkovModel, CliError> {
        let kind = match &self.model {
            ModelSpec::Eigen { theta } => ModelKind::Eigen { theta: *theta },
            ModelSpec::BrownianTorus => ModelKind::BrownianTorus,
            ModelSpec::BrownianLine { half_width } => ModelKind::BrownianLine { half_width: *half_width },
            ModelSpec::JumpDiffusion(jd) => {
                positive("model.euler_step", jd.euler_step)?;
                ModelKind::JumpDiffusion(JumpDiffusion {
                    drift: Affine { constant: jd.drift.constant, slope: jd.drift.slope },
                    diffusion: Affine { constant: jd.diffusion.constant, slope: jd.diffusion.slope },
                    small_jump_scale: jd.small_jump_scale,
                    large_jump_scale: jd.large_jump_scale,
                    jumps: JumpLaw {
                        intensity: jd.jumps.intensity,
                        rate: jd.jumps.rate,
                        max_size: jd.jumps.max_size,
                        symmetric: jd.jumps.symmetric,
                    },
                    step: Some(jd.euler_step),
                })
            }
        };
        MarkovModel::new(kind).map_err(in_section("model"))
    }

    pub fn test_function(&self) -> TestFunction {
        match self.function {
            FunctionSpec::Constant { value } => TestFunction::Constant(value),
            FunctionSpec::Sine { mode } => TestFunction::Sine { mode },
            FunctionSpec::Cosine { mode } => TestFunction::Cosine { mode },
            FunctionSpec::Gaussian { width } => TestFunction::Gaussian { width },
        }
    }

    /// `theta` of the eigen model, required by the scalar suites.
    pub fn theta(&self) -> Result<f64, CliError> {
        match self.model {
            ModelSpec::Eigen { theta } => Ok(theta),
            _ => Err(CliError::field("model.kind", format!("{} needs the eigen model", self.kind.name()))),
        }
    }

    fn check_numerics(&self) -> Result<(), CliError> {
        let n = &self.numerics;
        if n.times.is_empty() {
            return Err(CliError::field("numerics.times", "empty time grid"));
        }
        for &t in &n.times {
            positive("numerics.times", t)?;
        }
        if n.times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(CliError::field("numerics.times", "times must be strictly increasing"));
        }
        finite("numerics.x", n.x)?;
        if n.samples < MIN_SAMPLES {
            return Err(CliError::field(
                "numerics.samples",
                format!("{} is below the minimum {MIN_SAMPLES}", n.samples),
            ));
        }
        positive("numerics.ds", n.ds)?;
        positive("numerics.dt", n.dt)?;
        positive("numerics.dx", n.dx)?;
        positive("numerics.domain_half_width", n.domain_half_width)?;
        positive("numerics.sigmas", n.sigmas)?;
        nonnegative("numerics.dt_multiplier", n.dt_multiplier)?;
        nonnegative("numerics.abs_tolerance", n.abs_tolerance)?;
        positive("numerics.solver_tolerance", n.solver_tolerance)?;
        positive("numerics.horizon", n.horizon)?;
        if n.lambdas.is_empty() {
            return Err(CliError::field("numerics.lambdas", "no transform arguments"));
        }
        for &l in &n.lambdas {
            positive("numerics.lambdas", l)?;
        }
        nonnegative("numerics.s", n.s)?;
        if n.r_values.is_empty() {
            return Err(CliError::field("numerics.r_values", "no evaluation points"));
        }
        for &r in &n.r_values {
            nonnegative("numerics.r_values", r)?;
        }
        if !(n.alpha > 0.0 && n.alpha < 1.0) {
            return Err(CliError::field("numerics.alpha", format!("must lie in (0, 1), got {}", n.alpha)));
        }
        if n.pairs.is_empty() {
            return Err(CliError::field("numerics.pairs", "no (r, t) pairs"));
        }
        for &[r, t] in &n.pairs {
            positive("numerics.pairs", r)?;
            positive("numerics.pairs", t)?;
        }
        if n.outer_nodes == 0 {
            return Err(CliError::field("numerics.outer_nodes", "need at least one node"));
        }
        if n.samples_per_node < 2 {
            return Err(CliError::field("numerics.samples_per_node", "need at least two samples per node"));
        }
        if n.dt_levels.len() < 3 {
            return Err(CliError::field("numerics.dt_levels", "need at least three levels"));
        }
        for &h in &n.dt_levels {
            positive("numerics.dt_levels", h)?;
        }
        if n.dt_levels.windows(2).any(|w| ((w[0] / w[1]) - 2.0).abs() > 1e-9) {
            return Err(CliError::field("numerics.dt_levels", "each level must halve the previous one"));
        }
        let [lo, hi] = n.ratio_range;
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(CliError::field("numerics.ratio_range", format!("[{lo}, {hi}] is not an interval")));
        }
        Ok(())
    }

    fn check_kind(&self, ch: &BernsteinChar) -> Result<(), CliError> {
        match self.kind {
            ExperimentKind::Convergence | ExperimentKind::LaplaceCheck => {
                self.theta()?;
            }
            ExperimentKind::ReductionA0 if ch.kill_rate() != 0.0 => {
                return Err(CliError::field("bernstein.kill_rate", "reduction-a0 needs kill_rate = 0"));
            }
            ExperimentKind::CdfCheck | ExperimentKind::JumpCrossing if ch.measure().is_null() => {
                return Err(CliError::field("bernstein.measure.family", "the tail checks need a non-zero measure"));
            }
            _ => {}
        }
        let m = ch.measure();
        if self.kind.uses_estimator()
            && !m.is_null()
            && !m.is_infinite_activity()
            && !self.numerics.allow_finite_activity
        {
            return Err(CliError::field(
                "bernstein.measure.family",
                format!(
                    "{} has finite activity; set numerics.allow_finite_activity or pass --override-finite-activity",
                    m.family_name()
                ),
            ));
        }
        Ok(())
    }
}

fn in_section(section: &'static str) -> impl Fn(CoreError) -> CliError {
    move |e| match e {
        CoreError::Domain { what, value } => {
            CliError::field(&format!("{section}.{what}"), format!("out of range: {value}"))
        }
        other => CliError::field(section, other),
    }
}

fn finite(field: &str, v: f64) -> Result<(), CliError> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(CliError::field(field, format!("must be finite, got {v}")))
    }
}

fn positive(field: &str, v: f64) -> Result<(), CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(CliError::field(field, format!("must be positive, got {v}")))
    }
}

fn nonnegative(field: &str, v: f64) -> Result<(), CliError> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(CliError::field(field, format!("must be nonnegative, got {v}")))
    }
}

/// Sets a dotted path in a TOML tree, creating missing tables.
pub fn set_path(root: &mut toml::Value, path: &str, value: toml::Value) -> Result<(), CliError> {
    let mut node = root;
    let mut parts = path.split('.').peekable();
    while let Some(part) = parts.next() {
        if part.is_empty() {
            return Err(CliError::field(&format!("sweep.{path}"), "empty path segment"));
        }
        let table = node
            .as_table_mut()
            .ok_or_else(|| CliError::field(&format!("sweep.{path}"), format!("{part} is not inside a table")))?;
        if parts.peek().is_none() {
            table.insert(part.to_string(), value);
            return Ok(());
        }
        node = table.entry(part.to_string()).or_insert_with(|| toml::Value::Table(Default::default()));
    }
    Ok(())
}
