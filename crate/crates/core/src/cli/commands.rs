use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use super::output::{fmt_g, Outputs};
use super::scenario::{InvestmentSpec, Model, ModelKind, Scenario, SweepOutput, SweepParameter};
use super::CliError;
use crate::analysis::{
    asir_peak, certify_endemic, certify_ife, classify, limiting_infected, nullcline_samples, AsirPeakReport,
    Regime, RegimeReport,
};
use crate::integrator::{integrate, track_peak, IntegrationOptions, Peak, Trajectory};
use crate::investment::{eradication_check, solve, EradicationCheck, InvestmentSolution};
use crate::models::{AsisParams, AsisState};
use crate::stochastic::{simulate_ctmc, summarize, PopulationConfig, DEFAULT_GRID};

pub(super) struct Context {
    pub seed: Option<u64>,
}

type CmdResult = Result<Outputs, CliError>;

fn row(values: impl IntoIterator<Item = f64>) -> Vec<String> {
    values.into_iter().map(fmt_g).collect()
}

#[derive(Serialize)]
struct SimulateSummary<'a> {
    model: &'a str,
    final_time: f64,
    final_state: Value,
    final_infected: f64,
    converged: bool,
    peak: Peak,
    samples: usize,
    steps_accepted: usize,
    steps_rejected: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    formula_peak: Option<AsirPeakReport>,
}

fn summary<'a, const N: usize>(
    model: &'a str,
    traj: &Trajectory<N>,
    final_state: Value,
    infected: impl Fn(&[f64; N]) -> f64,
) -> Result<SimulateSummary<'a>, CliError> {
    Ok(SimulateSummary {
        model,
        final_time: traj.final_time(),
        final_state,
        final_infected: infected(&traj.final_state),
        converged: traj.converged,
        peak: track_peak(traj, &infected)?,
        samples: traj.len(),
        steps_accepted: traj.steps_accepted,
        steps_rejected: traj.steps_rejected,
        formula_peak: None,
    })
}

pub(super) fn simulate(sc: &Scenario) -> CmdResult {
    let opts = sc.require_integration()?;
    let mut out = Outputs::default();
    match sc.model()? {
        Model::Sis(p) => {
            let traj = integrate(&p, [sc.sis_initial()?], &opts)?;
            out.csv("trajectory.csv", &["t", "i"], traj.iter().map(|(t, y)| row([t, y[0]])));
            let fin = json!({ "i": traj.final_state[0] });
            out.json("summary.json", &summary("sis", &traj, fin, |y| y[0])?);
        }
        Model::Asis(p) => {
            let traj = integrate(&p, sc.asis_initial(&p)?.to_array(), &opts)?;
            out.csv(
                "trajectory.csv",
                &["t", "i_a", "i_r", "i"],
                traj.iter().map(|(t, y)| row([t, y[0], y[1], y[0] + y[1]])),
            );
            let [i_a, i_r] = traj.final_state;
            let fin = json!({ "i_a": i_a, "i_r": i_r });
            out.json("summary.json", &summary("asis", &traj, fin, |y| y[0] + y[1])?);
        }
        Model::Asir(p) => {
            let (s_a0, i_0, s) = sc.asir_initial()?;
            let traj = integrate(&p, s.to_array(), &opts)?;
            out.csv(
                "trajectory.csv",
                &["t", "s_a", "s_r", "i_a", "i_r", "r", "i"],
                traj.iter().map(|(t, y)| row([t, y[0], y[1], y[2], y[3], y[4], y[2] + y[3]])),
            );
            let [s_a, s_r, i_a, i_r, r] = traj.final_state;
            let fin = json!({ "s_a": s_a, "s_r": s_r, "i_a": i_a, "i_r": i_r, "r": r });
            let mut sum = summary("asir", &traj, fin, |y| y[2] + y[3])?;
            if sc.analysis.is_some_and(|a| a.peak) {
                sum.formula_peak = Some(asir_peak(&p, s_a0, i_0)?);
            }
            out.json("summary.json", &sum);
        }
    }
    Ok(out)
}

fn params_json(p: &AsisParams) -> Value {
    json!({ "beta": p.beta(), "beta_a": p.beta_a(), "alpha": p.alpha(), "x_a": p.x_a() })
}

#[derive(Serialize)]
struct RegimeFile {
    params: Value,
    #[serde(flatten)]
    report: RegimeReport,
}

pub(super) fn analyze(sc: &Scenario) -> CmdResult {
    let p = sc.asis()?;
    let report = classify(&p);
    let mut out = Outputs::default();
    out.json("regime.json", &RegimeFile { params: params_json(&p), report });
    let Some(analysis) = sc.analysis else { return Ok(out) };

    if let Some(ns) = analysis.nullclines {
        let pts = nullcline_samples(&p, ns.points)?;
        out.csv(
            "nullclines.csv",
            &["i_a", "I_a", "Ihat_r"],
            pts.iter().map(|q| vec![fmt_g(q.i_a), q.i_a_nullcline.map(fmt_g).unwrap_or_default(), fmt_g(q.ihat_r)]),
        );
    }
    if let Some(pg) = analysis.phase_grid {
        if pg.points < 2 {
            return Err(CliError::Config(format!("analysis.phase_grid.points: must be at least 2, got {}", pg.points)));
        }
        let n = pg.points;
        let lin = |k: usize, span: f64| if k + 1 == n { span } else { span * k as f64 / (n - 1) as f64 };
        let rows = (0..n).flat_map(|a| (0..n).map(move |r| (a, r))).map(|(a, r)| {
            let (i_a, i_r) = (lin(a, p.x_a()), lin(r, 1.0 - p.x_a()));
            let [fa, fr] = p.flow(i_a, i_r);
            row([i_a, i_r, fa, fr])
        });
        out.csv("phase_grid.csv", &["i_a", "i_r", "F_a", "F_r"], rows.collect::<Vec<_>>());
    }
    if let Some(ly) = analysis.lyapunov {
        let cert = match report.regime {
            Regime::IfeGas if ly.r.is_some() => {
                return Err(CliError::Config("analysis.lyapunov.R: only applies in the ENDEMIC regime".into()))
            }
            Regime::IfeGas => certify_ife(&p, ly.grid, ly.exclusion_radius)?,
            Regime::Endemic => certify_endemic(&p, ly.r, ly.grid, ly.exclusion_radius)?,
        };
        out.json("certificate.json", &cert);
    }
    Ok(out)
}

#[derive(Serialize)]
struct SolutionFile {
    family: &'static str,
    #[serde(rename = "M")]
    budget: f64,
    beta: f64,
    alpha: f64,
    #[serde(flatten)]
    solution: InvestmentSolution,
    eradication: EradicationCheck,
}

fn investment(sc: &Scenario) -> Result<InvestmentSpec, CliError> {
    sc.investment.ok_or_else(|| CliError::Config("missing field `investment`".into()))
}

pub(super) fn optimize(sc: &Scenario) -> CmdResult {
    sc.model()?;
    let spec = investment(sc)?;
    let (beta, alpha) = (sc.params.beta, sc.params.alpha);
    let prob = spec.problem(beta, alpha)?;
    let solution = solve(&prob)?;
    let family = match spec {
        InvestmentSpec::Linear { .. } => "linear",
        InvestmentSpec::Hyperbolic { .. } => "hyperbolic",
    };
    let mut out = Outputs::default();
    out.json(
        "solution.json",
        &SolutionFile { family, budget: spec.budget(), beta, alpha, solution, eradication: eradication_check(&prob) },
    );
    Ok(out)
}

#[derive(Serialize)]
struct PeakFile {
    formula: AsirPeakReport,
    integrated: Peak,
    delta: f64,
}

pub(super) fn peak(sc: &Scenario) -> CmdResult {
    let p = sc.asir()?;
    let (s_a0, i_0, s) = sc.asir_initial()?;
    let opts = sc.require_integration()?;
    let formula = asir_peak(&p, s_a0, i_0)?;
    let traj = integrate(&p, s.to_array(), &opts)?;
    let integrated = track_peak(&traj, |y| y[2] + y[3])?;
    let mut out = Outputs::default();
    out.json("peak.json", &PeakFile { formula, integrated, delta: (formula.i_pk - integrated.value).abs() });
    Ok(out)
}

fn default_outputs(sc: &Scenario) -> Vec<SweepOutput> {
    let mut v = match sc.model {
        ModelKind::Asis => vec![SweepOutput::LambdaPlus, SweepOutput::Regime, SweepOutput::EndemicFraction, SweepOutput::Limiting],
        ModelKind::Asir => vec![SweepOutput::Peak],
        ModelKind::Sis => vec![],
    };
    if sc.investment.is_some() {
        v.push(SweepOutput::AStar);
    }
    v
}

fn sweep_point(sc: &Scenario, param: SweepParameter, value: f64, outputs: &[SweepOutput]) -> Result<Vec<String>, CliError> {
    let mut local = sc.clone();
    match param {
        SweepParameter::Beta => local.params.beta = value,
        SweepParameter::Alpha => local.params.alpha = value,
        SweepParameter::BetaA => local.params.beta_a = Some(value),
        SweepParameter::XA => local.params.x_a = Some(value),
        SweepParameter::Budget => local.investment = Some(investment(sc)?.with_budget(value)),
        SweepParameter::SA0 => {
            let mut init = local.initial.unwrap_or_default();
            init.s_a0 = Some(value);
            local.initial = Some(init);
        }
    }
    let model = local
        .model()
        .map_err(|e| CliError::Config(format!("sweep.{} = {value}: {e}", param.name())))?;
    let mut cells = vec![fmt_g(value)];
    for o in outputs {
        let cell = match (o, model) {
            (SweepOutput::LambdaPlus, Model::Asis(p)) => fmt_g(classify(&p).spectral.lambda_plus),
            (SweepOutput::Regime, Model::Asis(p)) => match classify(&p).regime {
                Regime::IfeGas => "IFE_GAS".into(),
                Regime::Endemic => "ENDEMIC".into(),
            },
            (SweepOutput::EndemicFraction, Model::Asis(p)) => fmt_g(classify(&p).endemic_fraction.unwrap_or(0.0)),
            (SweepOutput::Limiting, Model::Asis(p)) => {
                fmt_g(limiting_infected(p.beta(), p.alpha(), p.x_a(), p.beta_a()))
            }
            (SweepOutput::AStar, _) => {
                fmt_g(solve(&investment(&local)?.problem(local.params.beta, local.params.alpha)?)?.a_star)
            }
            (SweepOutput::Peak, Model::Asir(p)) => {
                let (s_a0, i_0, _) = local.asir_initial()?;
                fmt_g(asir_peak(&p, s_a0, i_0)?.i_pk)
            }
            _ => unreachable!("applicability is checked before the sweep runs"),
        };
        cells.push(cell);
    }
    Ok(cells)
}

pub(super) fn sweep(sc: &Scenario) -> CmdResult {
    let spec = sc.sweep.clone().ok_or_else(|| CliError::Config("missing field `sweep`".into()))?;
    let outputs = spec.outputs.clone().unwrap_or_else(|| default_outputs(sc));
    if outputs.is_empty() {
        return Err(CliError::Config("sweep.outputs: nothing to compute for this model".into()));
    }
    for o in &outputs {
        let ok = match o {
            SweepOutput::LambdaPlus | SweepOutput::Regime | SweepOutput::EndemicFraction | SweepOutput::Limiting => {
                sc.model == ModelKind::Asis
            }
            SweepOutput::AStar => sc.investment.is_some(),
            SweepOutput::Peak => sc.model == ModelKind::Asir,
        };
        if !ok {
            return Err(CliError::Config(format!("sweep.outputs: `{}` does not apply to this scenario", o.name())));
        }
    }
    let applicable = match spec.parameter {
        SweepParameter::XA => sc.model == ModelKind::Asis,
        SweepParameter::SA0 => sc.model == ModelKind::Asir,
        SweepParameter::Budget => sc.investment.is_some(),
        SweepParameter::BetaA => sc.model != ModelKind::Sis,
        SweepParameter::Beta | SweepParameter::Alpha => true,
    };
    if !applicable {
        return Err(CliError::Config(format!(
            "sweep.parameter: `{}` does not apply to this scenario",
            spec.parameter.name()
        )));
    }

    let results: Vec<Result<Vec<String>, CliError>> =
        spec.values().into_par_iter().map(|v| sweep_point(sc, spec.parameter, v, &outputs)).collect();
    let rows = results.into_iter().collect::<Result<Vec<_>, _>>()?;
    let mut header = vec![spec.parameter.name()];
    header.extend(outputs.iter().map(|o| o.name()));
    let mut out = Outputs::default();
    out.csv("sweep.csv", &header, rows);
    Ok(out)
}

#[derive(Serialize)]
struct StochasticFile {
    #[serde(rename = "N")]
    n: u64,
    replicates: usize,
    seed: u64,
    t_end: f64,
    realized_x_a: f64,
    initial_counts: [u64; 2],
    extinction_fraction: f64,
    mean_ia: f64,
    mean_ir: f64,
    mean_i: f64,
    sd_ia: f64,
    sd_ir: f64,
    mean_field: Value,
    delta_ia: f64,
    delta_ir: f64,
    delta_i: f64,
}

pub(super) fn stochastic(sc: &Scenario, ctx: &Context) -> CmdResult {
    let p = sc.asis()?;
    let spec = sc.stochastic.ok_or_else(|| CliError::Config("missing field `stochastic`".into()))?;
    let start = sc.asis_initial(&p)?;
    let seed = ctx.seed.unwrap_or(spec.seed);
    let n = spec.n as f64;
    let counts = ((start.i_a * n).round() as u64, (start.i_r * n).round() as u64);
    let cfg = PopulationConfig::from_params(spec.n, &p, counts, seed, spec.t_end, spec.replicates)
        .and_then(|c| c.with_grid(spec.grid.unwrap_or(DEFAULT_GRID)))
        .map_err(|e| CliError::Config(format!("stochastic: {e}")))?;
    let summary = summarize(&simulate_ctmc(&cfg))?;

    let realized = p.with_x_a(cfg.realized_x_a())?;
    let mf_start = AsisState::new(counts.0 as f64 / n, counts.1 as f64 / n);
    let mf = integrate(&realized, mf_start.to_array(), &IntegrationOptions::new(spec.t_end, spec.t_end))?;
    let [mf_a, mf_r] = mf.final_state;

    let last = summary.times.len() - 1;
    let mut out = Outputs::default();
    out.csv(
        "ensemble.csv",
        &["t", "mean_ia", "mean_ir", "sd_ia", "sd_ir"],
        (0..=last).map(|j| {
            row([summary.times[j], summary.mean_ia[j], summary.mean_ir[j], summary.sd_ia[j], summary.sd_ir[j]])
        }),
    );
    let (mean_ia, mean_ir) = (summary.mean_ia[last], summary.mean_ir[last]);
    out.json(
        "stochastic.json",
        &StochasticFile {
            n: spec.n,
            replicates: spec.replicates,
            seed,
            t_end: spec.t_end,
            realized_x_a: summary.realized_x_a,
            initial_counts: [counts.0, counts.1],
            extinction_fraction: summary.extinction_fraction,
            mean_ia,
            mean_ir,
            mean_i: mean_ia + mean_ir,
            sd_ia: summary.sd_ia[last],
            sd_ir: summary.sd_ir[last],
            mean_field: json!({ "i_a": mf_a, "i_r": mf_r, "i": mf_a + mf_r }),
            delta_ia: mean_ia - mf_a,
            delta_ir: mean_ir - mf_r,
            delta_i: mean_ia + mean_ir - (mf_a + mf_r),
        },
    );
    Ok(out)
}
