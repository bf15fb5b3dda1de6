use serde::Serialize;

use crate::error::{Error, Result};
use crate::models::{AsisParams, STATE_TOLERANCE};

fn domain_err(name: &'static str, value: f64, domain: String) -> Error {
    Error::OutOfDomain { name, value, domain }
}

/// `I_a(i_a)`: the `i_r` at which `F_a` vanishes. Singular at `i_a = x_a`.
pub fn nullcline_a(p: &AsisParams, i_a: f64) -> Result<f64> {
    let xa = p.x_a();
    if !(i_a.is_finite() && i_a >= -STATE_TOLERANCE && i_a < xa) {
        return Err(domain_err("i_a", i_a, format!("[0, {xa})")));
    }
    let b = p.beta();
    Ok((p.alpha() / (b * (xa - i_a)) - (1.0 - p.beta_a() / b)) * i_a)
}

/// `I_r(i_r)`: the `i_a` at which `F_r` vanishes.
pub fn nullcline_r(p: &AsisParams, i_r: f64) -> Result<f64> {
    let (b, ba, a, xa) = (p.beta(), p.beta_a(), p.alpha(), p.x_a());
    let s_r = 1.0 - xa - i_r;
    let den = b * s_r + ba * i_r;
    if !(i_r.is_finite() && i_r >= -STATE_TOLERANCE && s_r >= -STATE_TOLERANCE) || den <= 0.0 {
        return Err(domain_err("i_r", i_r, format!("[0, {})", 1.0 - xa)));
    }
    Ok((a - b * s_r + ba * xa) / den * i_r)
}

fn offset(p: &AsisParams) -> f64 {
    p.alpha() + p.beta_a() * p.x_a() - p.beta() * (1.0 - p.x_a())
}

fn check_ia(p: &AsisParams, i_a: f64) -> Result<()> {
    if i_a.is_finite() && i_a >= -STATE_TOLERANCE && i_a <= p.x_a() + STATE_TOLERANCE {
        Ok(())
    } else {
        Err(domain_err("i_a", i_a, format!("[0, {}]", p.x_a())))
    }
}

/// `Î_r(i_a)`: the r-nullcline as a function of `i_a`, taking the `+` root
/// of `i_r² + B i_r − i_a(1 − x_a) = 0` with `B = (d + i_a(β − β_a))/β`.
pub fn nullcline_r_inverse(p: &AsisParams, i_a: f64) -> Result<f64> {
    check_ia(p, i_a)?;
    let b = (offset(p) + i_a * (p.beta() - p.beta_a())) / p.beta();
    let q = i_a * (1.0 - p.x_a());
    let root = (b * b + 4.0 * q).sqrt();
    // rationalised form for B > 0
    Ok(if b > 0.0 { 2.0 * q / (b + root) } else { 0.5 * (root - b) })
}

/// Closed-form derivative `Î_r'(i_a)`.
pub fn nullcline_r_inverse_slope(p: &AsisParams, i_a: f64) -> Result<f64> {
    check_ia(p, i_a)?;
    let (b, ba, xa) = (p.beta(), p.beta_a(), p.x_a());
    let lin = offset(p) + i_a * (b - ba);
    let num = 2.0 * (b - ba) * lin / (b * b) + 4.0 * (1.0 - xa);
    let den = 2.0 * (lin * lin / (b * b) + 4.0 * i_a * (1.0 - xa)).sqrt();
    Ok(0.5 * (ba / b - 1.0 + num / den))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NullclinePoint {
    pub i_a: f64,
    /// `None` at the singular end `i_a = x_a`.
    pub i_a_nullcline: Option<f64>,
    pub ihat_r: f64,
}

/// Both nullclines on a uniform `i_a` grid over `[0, x_a]`.
pub fn nullcline_samples(p: &AsisParams, points: usize) -> Result<Vec<NullclinePoint>> {
    if points < 2 {
        return Err(domain_err("points", points as f64, "[2, inf)".into()));
    }
    (0..points)
        .map(|k| {
            let i_a = if k + 1 == points { p.x_a() } else { p.x_a() * k as f64 / (points - 1) as f64 };
            Ok(NullclinePoint {
                i_a,
                i_a_nullcline: nullcline_a(p, i_a).ok(),
                ihat_r: nullcline_r_inverse(p, i_a)?,
            })
        })
        .collect()
}
