//! Parameter and state types with the exact vector fields of the SIS,
//! A-SIS and A-SIR contagion models.
//!
//! Parameters are validated once, at construction. Field evaluation comes in
//! two flavours: the checked free functions (`sis_field`, `asis_field`,
//! `asir_field`) reject states outside the tolerance-inflated domain, while
//! the `flow` methods are total and never clamp, so they can be used on the
//! integrator hot path and in finite-difference checks.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// States may leave their box by at most this much before being rejected.
pub const STATE_TOLERANCE: f64 = 1e-9;

fn positive(name: &'static str, v: f64) -> Result<f64> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(invalid(name, format!("must be finite and > 0, got {v}")))
    }
}

fn non_negative(name: &'static str, v: f64) -> Result<f64> {
    if v.is_finite() && v >= 0.0 {
        Ok(v)
    } else {
        Err(invalid(name, format!("must be finite and >= 0, got {v}")))
    }
}

fn within(v: f64, lo: f64, hi: f64) -> bool {
    v.is_finite() && v >= lo - STATE_TOLERANCE && v <= hi + STATE_TOLERANCE
}

/// Classic SIS rates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SisParams {
    beta: f64,
    alpha: f64,
}

impl SisParams {
    pub fn new(beta: f64, alpha: f64) -> Result<Self> {
        Ok(Self {
            beta: positive("beta", beta)?,
            alpha: positive("alpha", alpha)?,
        })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// `di/dt = βi(1−i) − αi`, unchecked.
    #[inline]
    pub fn flow(&self, i: f64) -> f64 {
        self.beta * i * (1.0 - i) - self.alpha * i
    }
}

pub fn sis_field(p: &SisParams, i: f64) -> Result<f64> {
    if !within(i, 0.0, 1.0) {
        return Err(Error::InvalidState(format!("SIS infected fraction {i} outside [0, 1]")));
    }
    Ok(p.flow(i))
}

/// A-SIS rates and population composition.
///
/// `beta_a` may be zero; that case is the pure-reactive aggregate and is
/// used to check the reduction to SIS.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AsisParams {
    beta: f64,
    beta_a: f64,
    alpha: f64,
    x_a: f64,
}

impl AsisParams {
    pub fn new(beta: f64, beta_a: f64, alpha: f64, x_a: f64) -> Result<Self> {
        let x_a = if x_a.is_finite() && (0.0..=1.0).contains(&x_a) {
            x_a
        } else {
            return Err(invalid("x_a", format!("must lie in [0, 1], got {x_a}")));
        };
        Ok(Self {
            beta: positive("beta", beta)?,
            beta_a: non_negative("beta_a", beta_a)?,
            alpha: positive("alpha", alpha)?,
            x_a,
        })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn beta_a(&self) -> f64 {
        self.beta_a
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn x_a(&self) -> f64 {
        self.x_a
    }

    pub fn with_x_a(&self, x_a: f64) -> Result<Self> {
        Self::new(self.beta, self.beta_a, self.alpha, x_a)
    }

    pub fn with_beta_a(&self, beta_a: f64) -> Result<Self> {
        Self::new(self.beta, beta_a, self.alpha, self.x_a)
    }

    /// The SIS model obtained by dropping the active defenders.
    pub fn sis(&self) -> SisParams {
        SisParams {
            beta: self.beta,
            alpha: self.alpha,
        }
    }

    /// Whether `s` lies in Γ = [0, x_a] × [0, 1 − x_a] up to [`STATE_TOLERANCE`].
    pub fn contains(&self, s: &AsisState) -> bool {
        within(s.i_a, 0.0, self.x_a) && within(s.i_r, 0.0, 1.0 - self.x_a)
    }

    pub fn check_state(&self, s: &AsisState) -> Result<()> {
        if self.contains(s) {
            Ok(())
        } else {
            Err(Error::InvalidState(format!(
                "(i_a, i_r) = ({}, {}) outside [0, {}] x [0, {}]",
                s.i_a,
                s.i_r,
                self.x_a,
                1.0 - self.x_a
            )))
        }
    }

    /// `(F_a, F_r)` at `(i_a, i_r)`, unchecked.
    #[inline]
    pub fn flow(&self, i_a: f64, i_r: f64) -> [f64; 2] {
        let i = i_a + i_r;
        let s_a = self.x_a - i_a;
        let s_r = 1.0 - self.x_a - i_r;
        [
            self.beta * s_a * i - self.beta_a * s_a * i_a - self.alpha * i_a,
            self.beta * s_r * i - self.beta_a * s_a * i_r - self.alpha * i_r,
        ]
    }
}

/// Infected-active and infected-reactive fractions.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct AsisState {
    pub i_a: f64,
    pub i_r: f64,
}

impl AsisState {
    pub const IFE: AsisState = AsisState { i_a: 0.0, i_r: 0.0 };

    pub fn new(i_a: f64, i_r: f64) -> Self {
        Self { i_a, i_r }
    }

    pub fn total(&self) -> f64 {
        self.i_a + self.i_r
    }

    pub fn to_array(self) -> [f64; 2] {
        [self.i_a, self.i_r]
    }

    pub fn from_array(a: [f64; 2]) -> Self {
        Self { i_a: a[0], i_r: a[1] }
    }
}

pub fn asis_field(p: &AsisParams, s: &AsisState) -> Result<(f64, f64)> {
    p.check_state(s)?;
    let [fa, fr] = p.flow(s.i_a, s.i_r);
    Ok((fa, fr))
}

/// A-SIR rates. As with [`AsisParams`], `beta_a = 0` is admitted so the
/// classic SIR model is a special case.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AsirParams {
    beta: f64,
    beta_a: f64,
    alpha: f64,
}

impl AsirParams {
    pub fn new(beta: f64, beta_a: f64, alpha: f64) -> Result<Self> {
        Ok(Self {
            beta: positive("beta", beta)?,
            beta_a: non_negative("beta_a", beta_a)?,
            alpha: positive("alpha", alpha)?,
        })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn beta_a(&self) -> f64 {
        self.beta_a
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Five derivatives in the order `(s_a, s_r, i_a, i_r, r)`, unchecked.
    ///
    /// `dr/dt` is formed as the negated sum of the other four, so the
    /// left-to-right sum of the returned vector is exactly zero. Analytically
    /// it equals `β_a s_a i + α i`.
    #[inline]
    pub fn flow(&self, y: &[f64; 5]) -> [f64; 5] {
        let [s_a, s_r, i_a, i_r, _] = *y;
        let i = i_a + i_r;
        let ds_a = -self.beta * s_a * i;
        let ds_r = -self.beta * s_r * i;
        let di_a = self.beta * s_a * i - self.beta_a * s_a * i_a - self.alpha * i_a;
        let di_r = self.beta * s_r * i - self.beta_a * s_a * i_r - self.alpha * i_r;
        let dr = -(ds_a + ds_r + di_a + di_r);
        [ds_a, ds_r, di_a, di_r, dr]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AsirState {
    pub s_a: f64,
    pub s_r: f64,
    pub i_a: f64,
    pub i_r: f64,
    pub r: f64,
}

impl AsirState {
    /// Initial state with no recovered nodes: `s_r = 1 − i_0 − s_a0`, the
    /// infected mass split between the two types in proportion `s_a0 : s_r0`.
    pub fn initial(s_a0: f64, i_0: f64) -> Result<Self> {
        if !(i_0.is_finite() && i_0 > 0.0 && i_0 < 1.0) {
            return Err(Error::OutOfDomain {
                name: "i_0",
                value: i_0,
                domain: "(0, 1)".into(),
            });
        }
        let s0 = 1.0 - i_0;
        if !(s_a0.is_finite() && s_a0 >= 0.0 && s_a0 <= s0 + STATE_TOLERANCE) {
            return Err(Error::OutOfDomain {
                name: "s_a0",
                value: s_a0,
                domain: format!("[0, {s0}]"),
            });
        }
        let s_a0 = s_a0.min(s0);
        let share = s_a0 / s0;
        let s = Self {
            s_a: s_a0,
            s_r: s0 - s_a0,
            i_a: i_0 * share,
            i_r: i_0 * (1.0 - share),
            r: 0.0,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn infected(&self) -> f64 {
        self.i_a + self.i_r
    }

    pub fn susceptible(&self) -> f64 {
        self.s_a + self.s_r
    }

    pub fn to_array(self) -> [f64; 5] {
        [self.s_a, self.s_r, self.i_a, self.i_r, self.r]
    }

    pub fn from_array(a: [f64; 5]) -> Self {
        Self {
            s_a: a[0],
            s_r: a[1],
            i_a: a[2],
            i_r: a[3],
            r: a[4],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let parts = self.to_array();
        if parts.iter().any(|&v| !within(v, 0.0, 1.0)) {
            return Err(Error::InvalidState(format!(
                "A-SIR compartments {parts:?} must each lie in [0, 1]"
            )));
        }
        let mass: f64 = parts.iter().sum();
        if (mass - 1.0).abs() > STATE_TOLERANCE {
            return Err(Error::InvalidState(format!(
                "A-SIR compartments sum to {mass}, expected 1"
            )));
        }
        Ok(())
    }
}

pub fn asir_field(p: &AsirParams, s: &AsirState) -> Result<[f64; 5]> {
    s.validate()?;
    Ok(p.flow(&s.to_array()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn endemic_params() -> AsisParams {
        AsisParams::new(0.3, 0.28, 0.1, 0.2).unwrap()
    }

    #[test]
    fn sis_field_examples() {
        let p = SisParams::new(0.3, 0.1).unwrap();
        assert_eq!(sis_field(&p, 0.0).unwrap(), 0.0);
        assert_abs_diff_eq!(sis_field(&p, 1.0 - 0.1 / 0.3).unwrap(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(sis_field(&p, 0.5).unwrap(), 0.025, epsilon = 1e-15);
        assert!(sis_field(&p, 1.1).is_err());
        assert!(sis_field(&p, -1e-6).is_err());
        assert!(sis_field(&p, -1e-10).is_ok());
    }

    #[test]
    fn params_reject_bad_values() {
        assert!(SisParams::new(0.0, 0.1).is_err());
        assert!(SisParams::new(0.3, f64::NAN).is_err());
        assert!(AsisParams::new(0.3, 0.2, 0.1, 1.2).is_err());
        assert!(AsisParams::new(0.3, -0.2, 0.1, 0.5).is_err());
        assert!(AsisParams::new(0.3, 0.0, 0.1, 0.5).is_ok());
        assert!(AsirParams::new(0.3, 0.2, 0.0).is_err());
        match AsisParams::new(0.3, 0.2, 0.1, 1.5) {
            Err(Error::InvalidParameter { name, .. }) => assert_eq!(name, "x_a"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn asis_ife_is_equilibrium() {
        assert_eq!(asis_field(&endemic_params(), &AsisState::IFE).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn asis_endemic_point_is_equilibrium() {
        let (fa, fr) = asis_field(&endemic_params(), &AsisState::new(0.118033, 0.472131)).unwrap();
        assert!(fa.abs() < 1e-6 && fr.abs() < 1e-6, "{fa} {fr}");
    }

    #[test]
    fn asis_rejects_states_outside_gamma() {
        let p = endemic_params();
        assert!(asis_field(&p, &AsisState::new(0.3, 0.1)).is_err());
        assert!(asis_field(&p, &AsisState::new(0.1, 0.8 + 1e-8)).is_err());
        assert!(asis_field(&p, &AsisState::new(0.2 + 5e-10, 0.0)).is_ok());
    }

    #[test]
    fn asir_examples() {
        let p = AsirParams::new(0.3, 0.2, 0.1).unwrap();
        let quiet = AsirState { s_a: 0.3, s_r: 0.5, i_a: 0.0, i_r: 0.0, r: 0.2 };
        assert_eq!(asir_field(&p, &quiet).unwrap(), [0.0; 5]);

        let s = AsirState { s_a: 0.3, s_r: 0.69, i_a: 0.005, i_r: 0.005, r: 0.0 };
        let d = asir_field(&p, &s).unwrap();
        assert_abs_diff_eq!(d[0], -9e-4, epsilon = 1e-15);
        // dr/dt = β_a s_a i + α i
        assert_abs_diff_eq!(d[4], 0.2 * 0.3 * 0.01 + 0.1 * 0.01, epsilon = 1e-15);

        let bad = AsirState { r: 0.1, ..s };
        assert!(asir_field(&p, &bad).is_err());
    }

    #[test]
    fn asir_initial_splits_infected_mass() {
        let s = AsirState::initial(0.3, 0.01).unwrap();
        assert_abs_diff_eq!(s.s_r, 0.69, epsilon = 1e-15);
        assert_abs_diff_eq!(s.infected(), 0.01, epsilon = 1e-15);
        assert_abs_diff_eq!(s.i_a / s.i_r, 0.3 / 0.69, epsilon = 1e-12);
        assert!(AsirState::initial(0.995, 0.01).is_err());
        assert!(AsirState::initial(0.3, 0.0).is_err());
    }

    proptest! {
        #[test]
        fn asir_components_sum_to_zero(
            beta in 0.01f64..2.0, beta_a in 0.0f64..2.0, alpha in 0.01f64..2.0,
            w in proptest::array::uniform5(0.0f64..1.0),
        ) {
            let total: f64 = w.iter().sum();
            prop_assume!(total > 1e-3);
            let y = w.map(|v| v / total);
            let p = AsirParams::new(beta, beta_a, alpha).unwrap();
            let d = p.flow(&y);
            prop_assert_eq!(d[0] + d[1] + d[2] + d[3] + d[4], 0.0);
            let i = y[2] + y[3];
            prop_assert!((d[4] - (beta_a * y[0] * i + alpha * i)).abs() < 1e-14);
        }

        #[test]
        fn zero_active_fraction_reduces_to_sis(
            beta in 0.01f64..2.0, beta_a in 0.0f64..2.0, alpha in 0.01f64..2.0, i_r in 0.0f64..=1.0,
        ) {
            let p = AsisParams::new(beta, beta_a, alpha, 0.0).unwrap();
            let (fa, fr) = asis_field(&p, &AsisState::new(0.0, i_r)).unwrap();
            prop_assert_eq!(fa, 0.0);
            prop_assert!((fr - sis_field(&p.sis(), i_r).unwrap()).abs() < 1e-15);
        }

        #[test]
        fn no_cleanup_aggregates_to_sis(
            beta in 0.01f64..2.0, alpha in 0.01f64..2.0, x_a in 0.0f64..=1.0,
            u in 0.0f64..=1.0, v in 0.0f64..=1.0,
        ) {
            let p = AsisParams::new(beta, 0.0, alpha, x_a).unwrap();
            let s = AsisState::new(u * x_a, v * (1.0 - x_a));
            let (fa, fr) = asis_field(&p, &s).unwrap();
            let sis = sis_field(&p.sis(), s.total()).unwrap();
            prop_assert!((fa + fr - sis).abs() < 1e-14);
        }
    }
}
