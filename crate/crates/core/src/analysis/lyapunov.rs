//! Max-separable Lyapunov functions for both equilibria, the admissible
//! weight window for the endemic one, and grid certification of descent.
//!
//! Certification evaluates the upper Dini derivative of `V` (or `V_R`) at
//! every grid node of Γ outside small exclusion balls around the
//! equilibria, and records the largest value seen. A certificate holds when
//! that maximum is strictly negative.

use rayon::prelude::*;
use serde::Serialize;

use super::nullcline::nullcline_r_inverse_slope;
use super::{classify, spectral};
use crate::error::{invalid, Error, Result};
use crate::models::{AsisParams, AsisState};

fn interior_fraction(p: &AsisParams) -> Result<()> {
    let xa = p.x_a();
    if xa > 0.0 && xa < 1.0 {
        Ok(())
    } else {
        Err(invalid("x_a", "Lyapunov functions need x_a in (0, 1); use the SIS reduction"))
    }
}

/// `V(i) = max{((1 − x_a)/x_a) i_a, i_r}`.
pub fn lyapunov_ife(p: &AsisParams, s: &AsisState) -> Result<f64> {
    interior_fraction(p)?;
    p.check_state(s)?;
    let k = (1.0 - p.x_a()) / p.x_a();
    Ok((k * s.i_a).max(s.i_r))
}

/// `dV/dt` in indicator form: `F_r` above the line `i_r = ((1−x_a)/x_a) i_a`,
/// `F_a` on or below it.
pub fn lyapunov_ife_rate(p: &AsisParams, s: &AsisState) -> Result<f64> {
    interior_fraction(p)?;
    p.check_state(s)?;
    Ok(ife_rate(p, s.i_a, s.i_r))
}

fn ife_rate(p: &AsisParams, i_a: f64, i_r: f64) -> f64 {
    let k = (1.0 - p.x_a()) / p.x_a();
    let [fa, fr] = p.flow(i_a, i_r);
    if i_r > k * i_a {
        fr
    } else {
        fa
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum EndemicRegion {
    /// Γ_a^<: `V_R = x_a f − i_a`.
    #[serde(rename = "GAMMA_A_LT")]
    ActiveBelow,
    /// Γ_a^≥: `V_R = i_a − x_a f`.
    #[serde(rename = "GAMMA_A_GE")]
    ActiveAbove,
    /// Γ_r^<: `V_R = R((1 − x_a) f − i_r)`.
    #[serde(rename = "GAMMA_R_LT")]
    ReactiveBelow,
    /// Γ_r^≥: `V_R = R(i_r − (1 − x_a) f)`.
    #[serde(rename = "GAMMA_R_GE")]
    ReactiveAbove,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LyapunovValue {
    pub value: f64,
    /// On ties between the two terms the active region is reported.
    pub region: EndemicRegion,
}

struct Endemic {
    target_a: f64,
    target_r: f64,
}

fn endemic_setup(p: &AsisParams, r: f64) -> Result<Endemic> {
    interior_fraction(p)?;
    let f = classify(p)
        .endemic_fraction
        .ok_or(Error::WrongRegime("lambda_plus > 0 (endemic regime)"))?;
    if !(r.is_finite() && r > 0.0) {
        return Err(invalid("R", format!("must be finite and > 0, got {r}")));
    }
    Ok(Endemic {
        target_a: p.x_a() * f,
        target_r: (1.0 - p.x_a()) * f,
    })
}

/// `V_R(i) = max{|i_a − x_a f|, R |i_r − (1 − x_a) f|}` and its region.
pub fn lyapunov_endemic(p: &AsisParams, s: &AsisState, r: f64) -> Result<LyapunovValue> {
    let e = endemic_setup(p, r)?;
    p.check_state(s)?;
    let da = s.i_a - e.target_a;
    let dr = s.i_r - e.target_r;
    let (va, vr) = (da.abs(), r * dr.abs());
    Ok(if va >= vr {
        LyapunovValue {
            value: va,
            region: if da < 0.0 { EndemicRegion::ActiveBelow } else { EndemicRegion::ActiveAbove },
        }
    } else {
        LyapunovValue {
            value: vr,
            region: if dr < 0.0 { EndemicRegion::ReactiveBelow } else { EndemicRegion::ReactiveAbove },
        }
    })
}

/// Upper Dini derivative of `V_R` along the flow. At ties between the two
/// terms the point lies in both regions and the larger rate is taken.
pub fn lyapunov_endemic_rate(p: &AsisParams, s: &AsisState, r: f64) -> Result<f64> {
    let e = endemic_setup(p, r)?;
    p.check_state(s)?;
    Ok(endemic_rate(p, &e, r, s.i_a, s.i_r))
}

fn endemic_rate(p: &AsisParams, e: &Endemic, r: f64, i_a: f64, i_r: f64) -> f64 {
    let da = i_a - e.target_a;
    let dr = i_r - e.target_r;
    let (va, vr) = (da.abs(), r * dr.abs());
    let [fa, fr] = p.flow(i_a, i_r);
    let rate_a = if da < 0.0 { -fa } else { fa };
    let rate_r = if dr < 0.0 { -r * fr } else { r * fr };
    if va > vr {
        rate_a
    } else if vr > va {
        rate_r
    } else {
        rate_a.max(rate_r)
    }
}

/// Admissible weights `R` for the endemic Lyapunov function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RWindow {
    /// `lower ≤ R < upper`, where `upper = min{nullcline_bound, tangent_bound}`.
    Interval {
        lower: f64,
        upper: f64,
        nullcline_bound: f64,
        tangent_bound: f64,
    },
    /// Large active fraction: the single choice `R = 1`.
    Fixed { r: f64 },
}

impl RWindow {
    /// Midpoint of the interval, or the fixed value.
    pub fn choose(&self) -> f64 {
        match *self {
            RWindow::Interval { lower, upper, .. } => 0.5 * (lower + upper),
            RWindow::Fixed { r } => r,
        }
    }

    pub fn contains(&self, r: f64) -> bool {
        match *self {
            RWindow::Interval { lower, upper, .. } => r >= lower && r < upper,
            RWindow::Fixed { r: fixed } => r == fixed,
        }
    }

    pub fn is_empty(&self) -> bool {
        matches!(*self, RWindow::Interval { lower, upper, .. } if !(lower < upper))
    }
}

pub fn admissible_r(p: &AsisParams) -> Result<RWindow> {
    interior_fraction(p)?;
    let rep = classify(p);
    let (f, eq) = match (rep.endemic_fraction, rep.endemic) {
        (Some(f), Some(eq)) => (f, eq),
        _ => return Err(Error::WrongRegime("lambda_plus > 0 (endemic regime)")),
    };
    let (b, ba, a, xa) = (p.beta(), p.beta_a(), p.alpha(), p.x_a());
    if xa > (b - a) / (b + ba) {
        return Ok(RWindow::Fixed { r: 1.0 });
    }
    let d = a + ba * xa - b * (1.0 - xa);
    let nullcline_bound = 1.0 / nullcline_r_inverse_slope(p, eq.i_a)?;
    let tangent_bound = b * xa * f / (d + b * f * (1.0 - xa));
    Ok(RWindow::Interval {
        lower: xa / (1.0 - xa),
        upper: nullcline_bound.min(tangent_bound),
        nullcline_bound,
        tangent_bound,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum LyapunovKind {
    #[serde(rename = "IFE")]
    Ife,
    #[serde(rename = "ENDEMIC")]
    Endemic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LyapunovCertificate {
    pub kind: LyapunovKind,
    #[serde(rename = "R")]
    pub r: Option<f64>,
    #[serde(rename = "R_window")]
    pub r_window: Option<RWindow>,
    pub grid: usize,
    pub exclusion_radius: f64,
    pub samples_checked: usize,
    pub max_violation: f64,
    pub holds: bool,
}

/// Maximum of `rate` over an `n × n` grid on Γ, skipping nodes within
/// `eps` (max-norm) of any of `skip`.
fn grid_max(
    p: &AsisParams,
    n: usize,
    eps: f64,
    skip: &[(f64, f64)],
    rate: impl Fn(f64, f64) -> f64 + Sync,
) -> (usize, f64) {
    let xa = p.x_a();
    let xr = 1.0 - xa;
    let coord = |k: usize, span: f64| if k + 1 == n { span } else { span * k as f64 / (n - 1) as f64 };
    (0..n)
        .into_par_iter()
        .map(|row| {
            let i_a = coord(row, xa);
            let mut count = 0usize;
            let mut worst = f64::NEG_INFINITY;
            for col in 0..n {
                let i_r = coord(col, xr);
                if skip.iter().any(|&(a, r)| (i_a - a).abs().max((i_r - r).abs()) < eps) {
                    continue;
                }
                count += 1;
                worst = worst.max(rate(i_a, i_r));
            }
            (count, worst)
        })
        .reduce(|| (0, f64::NEG_INFINITY), |x, y| (x.0 + y.0, x.1.max(y.1)))
}

fn check_grid(n: usize, eps: f64) -> Result<()> {
    if n < 2 {
        return Err(invalid("grid", "needs at least 2 points per axis"));
    }
    if !(eps.is_finite() && eps > 0.0) {
        return Err(invalid("exclusion_radius", "must be finite and > 0"));
    }
    Ok(())
}

/// Grid certification of `V` for the infection-free equilibrium (`λ_+ ≤ 0`).
pub fn certify_ife(p: &AsisParams, n: usize, eps: f64) -> Result<LyapunovCertificate> {
    interior_fraction(p)?;
    check_grid(n, eps)?;
    if spectral(p).lambda_plus > 0.0 {
        return Err(Error::WrongRegime("lambda_plus <= 0 (infection-free regime)"));
    }
    let (samples, worst) = grid_max(p, n, eps, &[(0.0, 0.0)], |a, r| ife_rate(p, a, r));
    Ok(LyapunovCertificate {
        kind: LyapunovKind::Ife,
        r: None,
        r_window: None,
        grid: n,
        exclusion_radius: eps,
        samples_checked: samples,
        max_violation: worst,
        holds: worst < 0.0,
    })
}

/// Grid certification of `V_R` for the endemic equilibrium. `r = None`
/// picks [`RWindow::choose`].
pub fn certify_endemic(p: &AsisParams, r: Option<f64>, n: usize, eps: f64) -> Result<LyapunovCertificate> {
    check_grid(n, eps)?;
    let window = admissible_r(p)?;
    let r = r.unwrap_or_else(|| window.choose());
    let e = endemic_setup(p, r)?;
    // the IFE and the endemic point are both equilibria in Γ
    let skip = [(0.0, 0.0), (e.target_a, e.target_r)];
    let (samples, worst) = grid_max(p, n, eps, &skip, |a, rr| endemic_rate(p, &e, r, a, rr));
    Ok(LyapunovCertificate {
        kind: LyapunovKind::Endemic,
        r: Some(r),
        r_window: Some(window),
        grid: n,
        exclusion_radius: eps,
        samples_checked: samples,
        max_violation: worst,
        holds: worst < 0.0,
    })
}
