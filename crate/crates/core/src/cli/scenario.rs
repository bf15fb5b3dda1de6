//! Scenario documents: the serde schema and its conversion into validated
//! library types.

use serde::Deserialize;

use super::CliError;
use crate::integrator::{IntegrationOptions, Method};
use crate::investment::{InvestmentProblem, ReturnFunction};
use crate::models::{AsirParams, AsirState, AsisParams, AsisState, SisParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Sis,
    Asis,
    Asir,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub model: ModelKind,
    pub params: ParamsSpec,
    #[serde(default)]
    pub initial: Option<InitialSpec>,
    #[serde(default)]
    pub integration: Option<IntegrationSpec>,
    #[serde(default)]
    pub analysis: Option<AnalysisSpec>,
    #[serde(default)]
    pub investment: Option<InvestmentSpec>,
    #[serde(default)]
    pub stochastic: Option<StochasticSpec>,
    #[serde(default)]
    pub sweep: Option<SweepSpec>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsSpec {
    pub beta: f64,
    #[serde(default)]
    pub beta_a: Option<f64>,
    pub alpha: f64,
    #[serde(default)]
    pub x_a: Option<f64>,
}

#[derive(Debug, Clone, Copy, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSpec {
    pub i: Option<f64>,
    pub i_a: Option<f64>,
    pub i_r: Option<f64>,
    pub s_a0: Option<f64>,
    pub i_0: Option<f64>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodSpec {
    DormandPrince,
    StepDoubling,
    FixedRk4,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegrationSpec {
    pub t_end: f64,
    pub sample_interval: f64,
    pub rel_tol: Option<f64>,
    pub abs_tol: Option<f64>,
    pub equilibrium_eps: Option<f64>,
    pub method: Option<MethodSpec>,
    pub step: Option<f64>,
}

#[derive(Debug, Clone, Copy, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisSpec {
    #[serde(default)]
    pub lyapunov: Option<LyapunovSpec>,
    #[serde(default)]
    pub nullclines: Option<NullclineSpec>,
    #[serde(default)]
    pub phase_grid: Option<PhaseGridSpec>,
    /// Adds the closed-form A-SIR peak to the simulate summary.
    #[serde(default)]
    pub peak: bool,
}

fn default_grid() -> usize {
    200
}
fn default_radius() -> f64 {
    1e-3
}
fn default_nullcline_points() -> usize {
    101
}
fn default_phase_points() -> usize {
    21
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LyapunovSpec {
    #[serde(default = "default_grid")]
    pub grid: usize,
    #[serde(default = "default_radius")]
    pub exclusion_radius: f64,
    #[serde(rename = "R", default)]
    pub r: Option<f64>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NullclineSpec {
    #[serde(default = "default_nullcline_points")]
    pub points: usize,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseGridSpec {
    #[serde(default = "default_phase_points")]
    pub points: usize,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase", deny_unknown_fields)]
pub enum InvestmentSpec {
    /// `h(a) = min{c1 a, 1}`, `g(b) = c2 b`.
    Linear {
        c1: f64,
        c2: f64,
        #[serde(rename = "M")]
        m: f64,
    },
    /// `h(a) = a/(a + c1)`, `g(b) = beta_bar b/(b + c2)`.
    Hyperbolic {
        c1: f64,
        c2: f64,
        beta_bar: f64,
        #[serde(rename = "M")]
        m: f64,
    },
}

impl InvestmentSpec {
    pub fn budget(&self) -> f64 {
        match *self {
            InvestmentSpec::Linear { m, .. } | InvestmentSpec::Hyperbolic { m, .. } => m,
        }
    }

    pub fn with_budget(mut self, budget: f64) -> Self {
        match &mut self {
            InvestmentSpec::Linear { m, .. } | InvestmentSpec::Hyperbolic { m, .. } => *m = budget,
        }
        self
    }

    pub fn problem(&self, beta: f64, alpha: f64) -> Result<InvestmentProblem, CliError> {
        let (h, g, m) = match *self {
            InvestmentSpec::Linear { c1, c2, m } => (
                ReturnFunction::linear_saturating(c1).map_err(field("investment.c1"))?,
                ReturnFunction::linear(c2).map_err(field("investment.c2"))?,
                m,
            ),
            InvestmentSpec::Hyperbolic { c1, c2, beta_bar, m } => (
                ReturnFunction::hyperbolic_saturating(c1, 1.0).map_err(field("investment.c1"))?,
                ReturnFunction::hyperbolic(c2, beta_bar).map_err(field("investment.c2/beta_bar"))?,
                m,
            ),
        };
        Ok(InvestmentProblem::new(h, g, m, beta, alpha)?)
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StochasticSpec {
    #[serde(rename = "N")]
    pub n: u64,
    pub replicates: usize,
    #[serde(default)]
    pub seed: u64,
    pub t_end: f64,
    #[serde(default)]
    pub grid: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
pub enum SweepParameter {
    #[serde(rename = "beta")]
    Beta,
    #[serde(rename = "beta_a")]
    BetaA,
    #[serde(rename = "alpha")]
    Alpha,
    #[serde(rename = "x_a")]
    XA,
    #[serde(rename = "M")]
    Budget,
    #[serde(rename = "s_a0")]
    SA0,
}

impl SweepParameter {
    pub fn name(self) -> &'static str {
        match self {
            SweepParameter::Beta => "beta",
            SweepParameter::BetaA => "beta_a",
            SweepParameter::Alpha => "alpha",
            SweepParameter::XA => "x_a",
            SweepParameter::Budget => "M",
            SweepParameter::SA0 => "s_a0",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
pub enum SweepOutput {
    #[serde(rename = "lambda_plus")]
    LambdaPlus,
    #[serde(rename = "regime")]
    Regime,
    #[serde(rename = "f")]
    EndemicFraction,
    #[serde(rename = "L")]
    Limiting,
    #[serde(rename = "a_star")]
    AStar,
    #[serde(rename = "i_pk")]
    Peak,
}

impl SweepOutput {
    pub fn name(self) -> &'static str {
        match self {
            SweepOutput::LambdaPlus => "lambda_plus",
            SweepOutput::Regime => "regime",
            SweepOutput::EndemicFraction => "f",
            SweepOutput::Limiting => "L",
            SweepOutput::AStar => "a_star",
            SweepOutput::Peak => "i_pk",
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub parameter: SweepParameter,
    pub min: f64,
    pub max: f64,
    pub count: usize,
    #[serde(default)]
    pub outputs: Option<Vec<SweepOutput>>,
}

impl SweepSpec {
    pub fn values(&self) -> Vec<f64> {
        let n = self.count;
        (0..n)
            .map(|k| if k + 1 == n { self.max } else { self.min + (self.max - self.min) * k as f64 / (n - 1) as f64 })
            .collect()
    }
}

fn field(name: &'static str) -> impl Fn(crate::Error) -> CliError {
    move |e| CliError::Config(format!("{name}: {e}"))
}

fn required<T>(v: Option<T>, name: &str) -> Result<T, CliError> {
    v.ok_or_else(|| CliError::Config(format!("missing field `{name}`")))
}

fn forbidden<T>(v: &Option<T>, name: &str, model: &str) -> Result<(), CliError> {
    match v {
        Some(_) => Err(CliError::Config(format!("field `{name}` does not apply to model {model}"))),
        None => Ok(()),
    }
}

/// The model named by the scenario, with validated parameters.
#[derive(Debug, Clone, Copy)]
pub enum Model {
    Sis(SisParams),
    Asis(AsisParams),
    Asir(AsirParams),
}

impl Scenario {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let scenario: Scenario = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            if path == "." {
                CliError::Config(e.into_inner().to_string())
            } else {
                CliError::Config(format!("{path}: {}", e.into_inner()))
            }
        })?;
        scenario.model()?;
        scenario.integration_options()?;
        if let Some(sw) = &scenario.sweep {
            sw.check()?;
        }
        Ok(scenario)
    }

    pub fn model(&self) -> Result<Model, CliError> {
        let p = &self.params;
        Ok(match self.model {
            ModelKind::Sis => {
                forbidden(&p.beta_a, "params.beta_a", "sis")?;
                forbidden(&p.x_a, "params.x_a", "sis")?;
                Model::Sis(SisParams::new(p.beta, p.alpha).map_err(field("params"))?)
            }
            ModelKind::Asis => Model::Asis(
                AsisParams::new(
                    p.beta,
                    required(p.beta_a, "params.beta_a")?,
                    p.alpha,
                    required(p.x_a, "params.x_a")?,
                )
                .map_err(field("params"))?,
            ),
            ModelKind::Asir => {
                forbidden(&p.x_a, "params.x_a", "asir")?;
                Model::Asir(
                    AsirParams::new(p.beta, required(p.beta_a, "params.beta_a")?, p.alpha)
                        .map_err(field("params"))?,
                )
            }
        })
    }

    pub fn asis(&self) -> Result<AsisParams, CliError> {
        match self.model()? {
            Model::Asis(p) => Ok(p),
            _ => Err(CliError::Config("model: this command requires model \"asis\"".into())),
        }
    }

    pub fn asir(&self) -> Result<AsirParams, CliError> {
        match self.model()? {
            Model::Asir(p) => Ok(p),
            _ => Err(CliError::Config("model: this command requires model \"asir\"".into())),
        }
    }

    fn initial_spec(&self) -> Result<InitialSpec, CliError> {
        required(self.initial, "initial")
    }

    pub fn sis_initial(&self) -> Result<f64, CliError> {
        let init = self.initial_spec()?;
        let i = required(init.i, "initial.i")?;
        if !(0.0..=1.0).contains(&i) {
            return Err(CliError::Config(format!("initial.i: must lie in [0, 1], got {i}")));
        }
        Ok(i)
    }

    pub fn asis_initial(&self, p: &AsisParams) -> Result<AsisState, CliError> {
        let init = self.initial_spec()?;
        let s = AsisState::new(required(init.i_a, "initial.i_a")?, required(init.i_r, "initial.i_r")?);
        p.check_state(&s).map_err(field("initial"))?;
        Ok(s)
    }

    /// `(s_a0, i_0)` and the A-SIR start state.
    pub fn asir_initial(&self) -> Result<(f64, f64, AsirState), CliError> {
        let init = self.initial_spec()?;
        let s_a0 = required(init.s_a0, "initial.s_a0")?;
        let i_0 = required(init.i_0, "initial.i_0")?;
        let s = AsirState::initial(s_a0, i_0).map_err(field("initial"))?;
        Ok((s_a0, i_0, s))
    }

    pub fn integration_options(&self) -> Result<Option<IntegrationOptions>, CliError> {
        let Some(spec) = self.integration else { return Ok(None) };
        let mut opts = IntegrationOptions::new(spec.t_end, spec.sample_interval);
        if spec.rel_tol.is_some() || spec.abs_tol.is_some() {
            opts = opts.tolerances(spec.rel_tol.unwrap_or(opts.rel_tol), spec.abs_tol.unwrap_or(opts.abs_tol));
        }
        if let Some(eps) = spec.equilibrium_eps {
            opts = opts.equilibrium_eps(eps);
        }
        match (spec.method, spec.step) {
            (Some(MethodSpec::FixedRk4), Some(step)) => opts = opts.method(Method::FixedRk4 { step }),
            (Some(MethodSpec::FixedRk4), None) => {
                return Err(CliError::Config("missing field `integration.step` (required by fixed_rk4)".into()))
            }
            (_, Some(_)) => {
                return Err(CliError::Config("integration.step: only used with method fixed_rk4".into()))
            }
            (Some(MethodSpec::StepDoubling), None) => opts = opts.method(Method::StepDoubling),
            (Some(MethodSpec::DormandPrince) | None, None) => {}
        }
        opts.validate().map_err(field("integration"))?;
        Ok(Some(opts))
    }

    pub fn require_integration(&self) -> Result<IntegrationOptions, CliError> {
        required(self.integration_options()?, "integration")
    }
}

impl SweepSpec {
    fn check(&self) -> Result<(), CliError> {
        if self.count < 2 {
            return Err(CliError::Config(format!("sweep.count: must be at least 2, got {}", self.count)));
        }
        if !(self.min.is_finite() && self.max.is_finite() && self.min < self.max) {
            return Err(CliError::Config(format!(
                "sweep.min/sweep.max: need finite min < max, got [{}, {}]",
                self.min, self.max
            )));
        }
        if matches!(&self.outputs, Some(v) if v.is_empty()) {
            return Err(CliError::Config("sweep.outputs: must not be empty".into()));
        }
        Ok(())
    }
}
