use serde::Serialize;

use crate::error::{Error, Result};
use crate::models::{AsirParams, STATE_TOLERANCE};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum PeakCase {
    /// The infection grows before it declines; the peak is interior.
    #[serde(rename = "FORMULA")]
    Formula,
    /// Infection never grows; the peak is the initial value.
    #[serde(rename = "MONOTONE")]
    Monotone,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AsirPeakReport {
    pub case: PeakCase,
    pub i_pk: f64,
    /// `(β s_0 − α)/β_a`; infinite when `β_a = 0` (JSON null).
    pub threshold_rhs: f64,
    /// Active-susceptible level at the peak, `α/A`, in the formula case with `s_a0 > 0`.
    pub s_a_at_peak: Option<f64>,
}

fn check_initial(s_a0: f64, i_0: f64) -> Result<f64> {
    if !(i_0.is_finite() && i_0 > 0.0 && i_0 < 1.0) {
        return Err(Error::OutOfDomain { name: "i_0", value: i_0, domain: "(0, 1)".into() });
    }
    let s0 = 1.0 - i_0;
    if !(s_a0.is_finite() && s_a0 >= 0.0 && s_a0 <= s0 + STATE_TOLERANCE) {
        return Err(Error::OutOfDomain { name: "s_a0", value: s_a0, domain: format!("[0, {s0}]") });
    }
    Ok(s0)
}

/// Peak of the total infected fraction for an A-SIR run starting with no
/// recovered nodes, `s_0 = 1 − i_0`.
pub fn asir_peak(p: &AsirParams, s_a0: f64, i_0: f64) -> Result<AsirPeakReport> {
    let s0 = check_initial(s_a0, i_0)?;
    let (b, ba, a) = (p.beta(), p.beta_a(), p.alpha());
    let growth = b * s0 - a;
    let threshold_rhs = if ba > 0.0 {
        growth / ba
    } else if growth > 0.0 {
        f64::INFINITY
    } else {
        f64::NEG_INFINITY
    };
    if s_a0 >= threshold_rhs {
        return Ok(AsirPeakReport { case: PeakCase::Monotone, i_pk: i_0, threshold_rhs, s_a_at_peak: None });
    }
    let i_pk = 1.0 - a / b - (ba / b) * s_a0 + (a / b) * (a / (b * s0 - ba * s_a0)).ln();
    let s_a_at_peak = (s_a0 > 0.0).then(|| a / (b * s0 / s_a0 - ba));
    Ok(AsirPeakReport { case: PeakCase::Formula, i_pk, threshold_rhs, s_a_at_peak })
}

/// Total infected fraction as a function of the active-susceptible level
/// along an A-SIR trajectory.
pub fn asir_i_of_sa(p: &AsirParams, s_a0: f64, i_0: f64, s_a: f64) -> Result<f64> {
    let s0 = check_initial(s_a0, i_0)?;
    if s_a0 <= 0.0 {
        return Err(Error::OutOfDomain {
            name: "s_a0",
            value: s_a0,
            domain: "(0, 1 - i_0]; use asir_peak for s_a0 = 0".into(),
        });
    }
    if !(s_a.is_finite() && s_a > 0.0 && s_a <= s_a0) {
        return Err(Error::OutOfDomain { name: "s_a", value: s_a, domain: format!("(0, {s_a0}]") });
    }
    let (b, a) = (p.beta(), p.alpha());
    let slope = b * s0 / s_a0 - p.beta_a();
    Ok(i_0 - (slope / b) * (s_a - s_a0) + (a / b) * (s_a / s_a0).ln())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn p() -> AsirParams {
        AsirParams::new(0.3, 0.2, 0.1).unwrap()
    }

    #[test]
    fn monotone_case() {
        let r = asir_peak(&p(), 0.99, 0.01).unwrap();
        assert_abs_diff_eq!(r.threshold_rhs, 0.985, epsilon = 1e-12);
        assert_eq!(r.case, PeakCase::Monotone);
        assert_eq!(r.i_pk, 0.01);
    }

    #[test]
    fn classic_sir_reduction() {
        let sir = AsirParams::new(0.3, 0.0, 0.1).unwrap();
        let r = asir_peak(&sir, 0.0, 0.01).unwrap();
        assert_eq!(r.case, PeakCase::Formula);
        let classic = 1.0 - 0.1 / 0.3 + (0.1 / 0.3) * (0.1 / (0.3 * 0.99f64)).ln();
        assert_abs_diff_eq!(r.i_pk, classic, epsilon = 1e-15);
        assert_abs_diff_eq!(r.i_pk, 0.3038, epsilon = 1e-4);
        assert!(r.threshold_rhs.is_infinite());
    }

    #[test]
    fn formula_case() {
        let r = asir_peak(&p(), 0.3, 0.01).unwrap();
        assert_eq!(r.case, PeakCase::Formula);
        assert_abs_diff_eq!(r.i_pk, 0.1790, epsilon = 1e-4);
    }

    #[test]
    fn invalid_initial_conditions() {
        assert!(asir_peak(&p(), 0.995, 0.01).is_err());
        assert!(asir_peak(&p(), 0.3, 0.0).is_err());
        assert!(asir_peak(&p(), -0.1, 0.01).is_err());
    }

    #[test]
    fn i_of_sa_anchors() {
        assert_eq!(asir_i_of_sa(&p(), 0.3, 0.01, 0.3).unwrap(), 0.01);
        let r = asir_peak(&p(), 0.3, 0.01).unwrap();
        let at_peak = asir_i_of_sa(&p(), 0.3, 0.01, r.s_a_at_peak.unwrap()).unwrap();
        assert_abs_diff_eq!(at_peak, r.i_pk, epsilon = 1e-12);
        // hand evaluation: A = 0.3·0.99/0.3 − 0.2 = 0.79
        let want = 0.01 - (0.79 / 0.3) * (0.2 - 0.3) + (0.1 / 0.3) * (0.2f64 / 0.3).ln();
        assert_abs_diff_eq!(asir_i_of_sa(&p(), 0.3, 0.01, 0.2).unwrap(), want, epsilon = 1e-15);
        assert!(asir_i_of_sa(&p(), 0.0, 0.01, 0.1).is_err());
        assert!(asir_i_of_sa(&p(), 0.3, 0.01, 0.31).is_err());
    }
}
