//! Concave return functions mapping money to defense capability.

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{invalid, Error, Result};

/// A smooth, increasing, concave base curve with analytic derivative.
pub trait ReturnCurve: Send + Sync + fmt::Debug {
    fn value(&self, x: f64) -> f64;
    fn derivative(&self, x: f64) -> f64;

    /// Where the curve first reaches 1, if known in closed form.
    /// `None` asks the caller to locate it numerically.
    fn saturation(&self) -> Option<Saturation> {
        None
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Saturation {
    At(f64),
    Never,
}

/// `x ↦ slope · x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Linear {
    pub slope: f64,
}

impl ReturnCurve for Linear {
    fn value(&self, x: f64) -> f64 {
        self.slope * x
    }
    fn derivative(&self, _x: f64) -> f64 {
        self.slope
    }
    fn saturation(&self) -> Option<Saturation> {
        Some(Saturation::At(1.0 / self.slope))
    }
}

/// `x ↦ scale · x / (x + half_saturation)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hyperbolic {
    pub half_saturation: f64,
    pub scale: f64,
}

impl ReturnCurve for Hyperbolic {
    fn value(&self, x: f64) -> f64 {
        self.scale * x / (x + self.half_saturation)
    }
    fn derivative(&self, x: f64) -> f64 {
        self.scale * self.half_saturation / (x + self.half_saturation).powi(2)
    }
    fn saturation(&self) -> Option<Saturation> {
        Some(if self.scale > 1.0 {
            Saturation::At(self.half_saturation / (self.scale - 1.0))
        } else {
            Saturation::Never
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Family {
    /// Unbounded member of the concave family, used for effectiveness.
    #[serde(rename = "GENERAL_D")]
    GeneralD,
    /// `min{ĥ, 1}`, used for the active fraction.
    #[serde(rename = "SATURATING")]
    Saturating,
}

const AUDIT_SAMPLES: usize = 1000;
const SATURATION_SEARCH_CAP: f64 = 1e9;

#[derive(Debug, Clone)]
pub struct ReturnFunction {
    curve: Arc<dyn ReturnCurve>,
    family: Family,
    saturation: f64,
}

impl ReturnFunction {
    pub fn general(curve: impl ReturnCurve + 'static) -> Self {
        Self { curve: Arc::new(curve), family: Family::GeneralD, saturation: f64::INFINITY }
    }

    /// `min{curve, 1}`. The saturation point comes from the curve when it
    /// knows it, else from bisection on `curve(a) = 1`.
    pub fn saturating(curve: impl ReturnCurve + 'static) -> Self {
        let curve: Arc<dyn ReturnCurve> = Arc::new(curve);
        let saturation = match curve.saturation() {
            Some(Saturation::At(t)) => t,
            Some(Saturation::Never) => f64::INFINITY,
            None => locate_saturation(curve.as_ref()),
        };
        Self { curve, family: Family::Saturating, saturation }
    }

    pub fn linear(slope: f64) -> Result<Self> {
        check_positive("slope", slope)?;
        Ok(Self::general(Linear { slope }))
    }

    pub fn linear_saturating(slope: f64) -> Result<Self> {
        check_positive("slope", slope)?;
        Ok(Self::saturating(Linear { slope }))
    }

    pub fn hyperbolic(half_saturation: f64, scale: f64) -> Result<Self> {
        check_positive("half_saturation", half_saturation)?;
        check_positive("scale", scale)?;
        Ok(Self::general(Hyperbolic { half_saturation, scale }))
    }

    pub fn hyperbolic_saturating(half_saturation: f64, scale: f64) -> Result<Self> {
        check_positive("half_saturation", half_saturation)?;
        check_positive("scale", scale)?;
        Ok(Self::saturating(Hyperbolic { half_saturation, scale }))
    }

    pub fn family(&self) -> Family {
        self.family
    }

    /// Saturation point `t` (infinite for general functions or curves that
    /// never reach 1).
    pub fn saturation(&self) -> f64 {
        self.saturation
    }

    pub fn value(&self, x: f64) -> f64 {
        match self.family {
            Family::GeneralD => self.curve.value(x),
            Family::Saturating if x >= self.saturation => 1.0,
            Family::Saturating => self.curve.value(x).min(1.0),
        }
    }

    /// Marginal return. For saturating functions this is the left
    /// derivative of the base curve up to and including `t`, and 0 beyond.
    pub fn derivative(&self, x: f64) -> f64 {
        match self.family {
            Family::Saturating if x > self.saturation => 0.0,
            _ => self.curve.derivative(x),
        }
    }

    /// Derivative of the unsaturated base curve.
    pub fn base_derivative(&self, x: f64) -> f64 {
        self.curve.derivative(x)
    }

    /// Samples the base curve on `[0, span]` (capped at `t` when saturating)
    /// and checks `value(0) = 0`, strictly increasing values, positive
    /// derivative and non-increasing derivative.
    pub fn audit(&self, span: f64) -> Result<()> {
        let end = span.min(self.saturation);
        if !(end.is_finite() && end > 0.0) {
            return Err(Error::AuditFailed(format!("audit span {end} must be finite and > 0")));
        }
        let v0 = self.curve.value(0.0);
        if v0.abs() > 1e-12 {
            return Err(Error::AuditFailed(format!("value(0) = {v0}, expected 0")));
        }
        let mut prev_v = v0;
        let mut prev_d = self.curve.derivative(0.0);
        if !(prev_d > 0.0) {
            return Err(Error::AuditFailed(format!("derivative(0) = {prev_d} is not positive")));
        }
        for k in 1..=AUDIT_SAMPLES {
            let x = end * k as f64 / AUDIT_SAMPLES as f64;
            let v = self.curve.value(x);
            let d = self.curve.derivative(x);
            if !(v.is_finite() && d.is_finite()) {
                return Err(Error::AuditFailed(format!("non-finite return at {x}")));
            }
            if v <= prev_v {
                return Err(Error::AuditFailed(format!("value not strictly increasing near {x}")));
            }
            if d <= 0.0 {
                return Err(Error::AuditFailed(format!("derivative {d} not positive at {x}")));
            }
            if d > prev_d * (1.0 + 1e-12) + 1e-15 {
                return Err(Error::AuditFailed(format!("derivative increases near {x} (not concave)")));
            }
            prev_v = v;
            prev_d = d;
        }
        Ok(())
    }
}

fn check_positive(name: &'static str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(invalid(name, format!("must be finite and > 0, got {v}")))
    }
}

fn locate_saturation(curve: &dyn ReturnCurve) -> f64 {
    if curve.value(SATURATION_SEARCH_CAP) < 1.0 {
        return f64::INFINITY;
    }
    let (mut lo, mut hi) = (0.0, SATURATION_SEARCH_CAP);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if curve.value(mid) >= 1.0 {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= 1e-14 * hi.max(1.0) {
            break;
        }
    }
    hi
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[derive(Debug)]
    struct Sqrt;
    impl ReturnCurve for Sqrt {
        fn value(&self, x: f64) -> f64 {
            (2.0 * x + 1.0).sqrt() - 1.0
        }
        fn derivative(&self, x: f64) -> f64 {
            1.0 / (2.0 * x + 1.0).sqrt()
        }
    }

    #[derive(Debug)]
    struct Convex;
    impl ReturnCurve for Convex {
        fn value(&self, x: f64) -> f64 {
            x * x + x
        }
        fn derivative(&self, x: f64) -> f64 {
            2.0 * x + 1.0
        }
    }

    #[test]
    fn linear_saturation() {
        let h = ReturnFunction::linear_saturating(4.0).unwrap();
        assert_eq!(h.saturation(), 0.25);
        assert_eq!(h.value(0.1), 0.4);
        assert_eq!(h.value(0.3), 1.0);
        assert_eq!(h.derivative(0.25), 4.0);
        assert_eq!(h.derivative(0.3), 0.0);
        assert_eq!(h.base_derivative(0.3), 4.0);
    }

    #[test]
    fn hyperbolic_saturation() {
        assert!(ReturnFunction::hyperbolic_saturating(1.0, 1.0).unwrap().saturation().is_infinite());
        let h = ReturnFunction::hyperbolic_saturating(1.0, 2.0).unwrap();
        assert_abs_diff_eq!(h.saturation(), 1.0);
    }

    #[test]
    fn numerical_saturation_point() {
        // sqrt(2a + 1) − 1 = 1 at a = 1.5
        let h = ReturnFunction::saturating(Sqrt);
        assert_abs_diff_eq!(h.saturation(), 1.5, epsilon = 1e-12);
        h.audit(3.0).unwrap();
    }

    #[test]
    fn audit_rejects_non_concave() {
        let g = ReturnFunction::general(Convex);
        assert!(matches!(g.audit(1.0), Err(Error::AuditFailed(_))));
    }

    #[test]
    fn audit_rejects_offset() {
        #[derive(Debug)]
        struct Offset;
        impl ReturnCurve for Offset {
            fn value(&self, x: f64) -> f64 {
                x + 0.1
            }
            fn derivative(&self, _x: f64) -> f64 {
                1.0
            }
        }
        assert!(ReturnFunction::general(Offset).audit(1.0).is_err());
    }

    #[test]
    fn constructors_validate() {
        assert!(ReturnFunction::linear(0.0).is_err());
        assert!(ReturnFunction::hyperbolic(1.0, -1.0).is_err());
    }
}
