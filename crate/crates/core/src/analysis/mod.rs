//! Closed-form analysis of the A-SIS and A-SIR models.

mod lyapunov;
mod nullcline;
mod peak;

pub use lyapunov::{
    admissible_r, certify_endemic, certify_ife, lyapunov_endemic, lyapunov_endemic_rate, lyapunov_ife,
    lyapunov_ife_rate, EndemicRegion, LyapunovCertificate, LyapunovKind, LyapunovValue, RWindow,
};
pub use nullcline::{nullcline_a, nullcline_r, nullcline_r_inverse, nullcline_r_inverse_slope, nullcline_samples, NullclinePoint};
pub use peak::{asir_i_of_sa, asir_peak, AsirPeakReport, PeakCase};

use serde::Serialize;

use crate::error::Result;
use crate::models::{AsisParams, AsisState};

/// Eigenvalues of the Jacobian at the infection-free equilibrium.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpectralInfo {
    pub lambda_plus: f64,
    pub lambda_minus: f64,
}

/// `λ+` within a few ulps of zero (relative to the rates involved) is
/// reported as exactly 0, so threshold-equality parameters classify as
/// IFE_GAS regardless of rounding in `x_a`.
pub fn spectral(p: &AsisParams) -> SpectralInfo {
    let cleanup = p.beta_a() * p.x_a();
    let mut lambda_plus = p.beta() - cleanup - p.alpha();
    if lambda_plus.abs() <= 8.0 * f64::EPSILON * p.beta().max(cleanup).max(p.alpha()) {
        lambda_plus = 0.0;
    }
    SpectralInfo { lambda_plus, lambda_minus: -(cleanup + p.alpha()) }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Regime {
    #[serde(rename = "IFE_GAS")]
    IfeGas,
    #[serde(rename = "ENDEMIC")]
    Endemic,
}

/// The two sides of the threshold test `β/α ≤ 1 + β_a x_a / α`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Threshold {
    pub ratio: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegimeReport {
    pub spectral: SpectralInfo,
    pub regime: Regime,
    pub threshold: Threshold,
    pub endemic: Option<AsisState>,
    pub endemic_fraction: Option<f64>,
    pub limiting_infected: f64,
    /// `x_a = 0`: the model is plain SIS and the threshold is `β/α` vs 1.
    pub sis_reduction: bool,
}

/// Long-run total infected fraction `L(x_a, β_a)`.
pub fn limiting_infected(beta: f64, alpha: f64, x_a: f64, beta_a: f64) -> f64 {
    let cleanup = beta_a * x_a;
    if cleanup < beta - alpha {
        let net = beta - cleanup;
        (net - alpha) / net
    } else {
        0.0
    }
}

pub fn classify(p: &AsisParams) -> RegimeReport {
    let spectral = spectral(p);
    let lp = spectral.lambda_plus;
    let threshold = Threshold {
        ratio: p.beta() / p.alpha(),
        bound: 1.0 + p.beta_a() * p.x_a() / p.alpha(),
    };
    let (regime, endemic, fraction) = if lp <= 0.0 {
        (Regime::IfeGas, None, None)
    } else {
        let f = lp / (lp + p.alpha());
        let eq = AsisState::new(p.x_a() * f, (1.0 - p.x_a()) * f);
        (Regime::Endemic, Some(eq), Some(f))
    };
    RegimeReport {
        spectral,
        regime,
        threshold,
        endemic,
        endemic_fraction: fraction,
        limiting_infected: fraction.unwrap_or(0.0),
        sis_reduction: p.x_a() == 0.0,
    }
}

/// Jacobian of `(F_a, F_r)` at `s`, rows indexed by component.
pub fn jacobian(p: &AsisParams, s: &AsisState) -> Result<[[f64; 2]; 2]> {
    p.check_state(s)?;
    Ok(jacobian_unchecked(p, s.i_a, s.i_r))
}

pub(crate) fn jacobian_unchecked(p: &AsisParams, i_a: f64, i_r: f64) -> [[f64; 2]; 2] {
    let (b, ba, a, xa) = (p.beta(), p.beta_a(), p.alpha(), p.x_a());
    [
        [(b - ba) * (xa - 2.0 * i_a) - b * i_r - a, b * (xa - i_a)],
        [ba * i_r + b * (1.0 - xa - i_r), b * (1.0 - xa - 2.0 * i_r - i_a) - ba * (xa - i_a) - a],
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::asis_field;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn ife_params() -> AsisParams {
        AsisParams::new(0.3, 0.35, 0.1, 0.6).unwrap()
    }
    fn endemic_params() -> AsisParams {
        AsisParams::new(0.3, 0.28, 0.1, 0.2).unwrap()
    }

    // eigenvalues of a real 2x2 matrix with real spectrum, descending
    fn eig2(m: [[f64; 2]; 2]) -> (f64, f64) {
        let tr = m[0][0] + m[1][1];
        let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        let disc = (tr * tr / 4.0 - det).sqrt();
        (tr / 2.0 + disc, tr / 2.0 - disc)
    }

    #[test]
    fn spectral_examples() {
        let s2 = spectral(&ife_params());
        assert_abs_diff_eq!(s2.lambda_plus, -0.01, epsilon = 1e-15);
        assert_abs_diff_eq!(s2.lambda_minus, -0.31, epsilon = 1e-15);
        let s3 = spectral(&endemic_params());
        assert_abs_diff_eq!(s3.lambda_plus, 0.144, epsilon = 1e-15);
        assert_abs_diff_eq!(s3.lambda_minus, -0.156, epsilon = 1e-15);
        let sis = spectral(&endemic_params().with_x_a(0.0).unwrap());
        assert_abs_diff_eq!(sis.lambda_plus, 0.3 - 0.1, epsilon = 1e-15);
    }

    #[test]
    fn classify_examples() {
        let r2 = classify(&ife_params());
        assert_eq!(r2.regime, Regime::IfeGas);
        assert_eq!(r2.limiting_infected, 0.0);
        assert!(r2.endemic.is_none());

        let r3 = classify(&endemic_params());
        assert_eq!(r3.regime, Regime::Endemic);
        let eq = r3.endemic.unwrap();
        assert_abs_diff_eq!(eq.i_a, 0.1180328, epsilon = 1e-7);
        assert_abs_diff_eq!(eq.i_r, 0.4721312, epsilon = 1e-7);
        assert_abs_diff_eq!(r3.endemic_fraction.unwrap(), 0.5901639, epsilon = 1e-7);
        assert_abs_diff_eq!(r3.limiting_infected, r3.endemic_fraction.unwrap(), epsilon = 1e-15);
        assert!(!r3.sis_reduction);

        for x_a in [0.2 / 0.28, (0.3 - 0.1) / 0.28] {
            let re = classify(&endemic_params().with_x_a(x_a).unwrap());
            assert_eq!(re.spectral.lambda_plus, 0.0);
            assert_eq!(re.regime, Regime::IfeGas);
            assert_eq!(re.limiting_infected, 0.0);
        }

        let sis = classify(&endemic_params().with_x_a(0.0).unwrap());
        assert!(sis.sis_reduction);
        assert_abs_diff_eq!(sis.threshold.bound, 1.0);
    }

    #[test]
    fn jacobian_at_ife() {
        let j = jacobian(&ife_params(), &AsisState::IFE).unwrap();
        let want = [[-0.13, 0.18], [0.12, -0.19]];
        for r in 0..2 {
            for c in 0..2 {
                assert_abs_diff_eq!(j[r][c], want[r][c], epsilon = 1e-15);
            }
        }
        for p in [ife_params(), endemic_params()] {
            let (hi, lo) = eig2(jacobian(&p, &AsisState::IFE).unwrap());
            let sp = spectral(&p);
            assert_abs_diff_eq!(hi, sp.lambda_plus, epsilon = 1e-12);
            assert_abs_diff_eq!(lo, sp.lambda_minus, epsilon = 1e-12);
        }
    }

    #[test]
    fn jacobian_matches_central_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let h = 1e-6;
        for _ in 0..100 {
            let p = AsisParams::new(
                rng.random_range(0.05..1.0),
                rng.random_range(0.0..1.0),
                rng.random_range(0.05..1.0),
                rng.random_range(0.05..0.95),
            )
            .unwrap();
            let s = AsisState::new(
                rng.random_range(h..p.x_a() - h),
                rng.random_range(h..1.0 - p.x_a() - h),
            );
            let j = jacobian(&p, &s).unwrap();
            let f = |ia: f64, ir: f64| asis_field(&p, &AsisState::new(ia, ir)).unwrap();
            let (pa, ma) = (f(s.i_a + h, s.i_r), f(s.i_a - h, s.i_r));
            let (pr, mr) = (f(s.i_a, s.i_r + h), f(s.i_a, s.i_r - h));
            let fd = [
                [(pa.0 - ma.0) / (2.0 * h), (pr.0 - mr.0) / (2.0 * h)],
                [(pa.1 - ma.1) / (2.0 * h), (pr.1 - mr.1) / (2.0 * h)],
            ];
            for r in 0..2 {
                for c in 0..2 {
                    assert_abs_diff_eq!(j[r][c], fd[r][c], epsilon = 1e-5);
                }
            }
        }
    }

    #[test]
    fn threshold_equivalence_on_random_draws() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..10_000 {
            let p = AsisParams::new(
                rng.random_range(0.01..2.0),
                rng.random_range(0.0..2.0),
                rng.random_range(0.01..2.0),
                rng.random_range(0.0..=1.0),
            )
            .unwrap();
            let rep = classify(&p);
            let by_eig = rep.spectral.lambda_plus <= 0.0;
            let by_ratio = p.beta() / p.alpha() <= 1.0 + p.beta_a() * p.x_a() / p.alpha();
            assert_eq!(rep.regime == Regime::IfeGas, by_eig);
            assert_eq!(by_eig, by_ratio, "{p:?}");
        }
    }

    proptest! {
        #[test]
        fn endemic_point_is_a_proportional_equilibrium(
            beta in 0.05f64..2.0, beta_a in 0.0f64..2.0, alpha in 0.01f64..1.0, x_a in 0.01f64..0.99,
        ) {
            let p = AsisParams::new(beta, beta_a, alpha, x_a).unwrap();
            let rep = classify(&p);
            if let Some(eq) = rep.endemic {
                let (fa, fr) = asis_field(&p, &eq).unwrap();
                prop_assert!(fa.hypot(fr) < 1e-12);
                let f = rep.endemic_fraction.unwrap();
                prop_assert!(f > 0.0 && f < 1.0);
                prop_assert!((eq.i_a / x_a - eq.i_r / (1.0 - x_a)).abs() < 1e-12);
                prop_assert!((rep.limiting_infected - f).abs() < 1e-12);
            } else {
                prop_assert_eq!(rep.limiting_infected, 0.0);
            }
        }
    }
}
