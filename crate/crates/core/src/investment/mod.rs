//! Optimal split of a defense budget between growing the active-defender
//! fraction (`a`, via the saturating return `h`) and improving cleanup
//! effectiveness (`b`, via the return `g`), minimizing the limiting infected
//! fraction `L(h(a), g(b))`.
//!
//! `L` is decreasing in the product `h(a) g(b)`, so the optimum spends the
//! whole budget and satisfies `g(M − a) h'(a) = g'(M − a) h(a)` unless the
//! active fraction saturates first. When some allocation drives the product
//! up to `β − α` the infection can be eradicated and `L = 0`.

mod returns;
pub mod search;

pub use returns::{Family, Hyperbolic, Linear, ReturnCurve, ReturnFunction, Saturation};

use serde::Serialize;

use crate::analysis::limiting_infected;
use crate::error::{invalid, Error, Result};
use search::{bisect_decreasing, golden_section_max};

pub const BISECTION_TOL: f64 = 1e-12;
pub const BISECTION_MAX_ITER: usize = 200;

#[derive(Debug, Clone)]
pub struct InvestmentProblem {
    h: ReturnFunction,
    g: ReturnFunction,
    budget: f64,
    beta: f64,
    alpha: f64,
}

impl InvestmentProblem {
    /// Validates the problem and audits both return functions over the budget.
    pub fn new(h: ReturnFunction, g: ReturnFunction, budget: f64, beta: f64, alpha: f64) -> Result<Self> {
        if h.family() != Family::Saturating {
            return Err(invalid("h", "active-fraction return must be saturating"));
        }
        if g.family() != Family::GeneralD {
            return Err(invalid("g", "effectiveness return must be a general concave function"));
        }
        if !(budget.is_finite() && budget > 0.0) {
            return Err(invalid("M", format!("budget must be finite and > 0, got {budget}")));
        }
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(invalid("alpha", format!("must be finite and > 0, got {alpha}")));
        }
        if !(beta.is_finite() && beta > alpha) {
            return Err(invalid("beta", format!("must exceed alpha = {alpha}, got {beta}")));
        }
        h.audit(budget)?;
        g.audit(budget)?;
        Ok(Self { h, g, budget, beta, alpha })
    }

    pub fn budget(&self) -> f64 {
        self.budget
    }

    pub fn h(&self) -> &ReturnFunction {
        &self.h
    }

    pub fn g(&self) -> &ReturnFunction {
        &self.g
    }

    pub fn with_budget(&self, budget: f64) -> Result<Self> {
        Self::new(self.h.clone(), self.g.clone(), budget, self.beta, self.alpha)
    }

    /// `h(a) · g(M − a)`.
    pub fn product(&self, a: f64) -> f64 {
        self.h.value(a) * self.g.value(self.budget - a)
    }

    /// `L(h(a), g(M − a))`.
    pub fn limiting_infected(&self, a: f64) -> f64 {
        limiting_infected(self.beta, self.alpha, self.h.value(a), self.g.value(self.budget - a))
    }

    fn residual(&self, a: f64) -> f64 {
        let b = self.budget - a;
        self.g.value(b) * self.h.derivative(a) - self.g.derivative(b) * self.h.value(a)
    }
}

/// `H_1(a) − H_2(a) = g(M − a) h'(a) − g'(M − a) h(a)`.
pub fn foc_residual(prob: &InvestmentProblem, a: f64) -> Result<f64> {
    if !(a > 0.0 && a < prob.budget) {
        return Err(Error::OutOfDomain { name: "a", value: a, domain: format!("(0, {})", prob.budget) });
    }
    Ok(prob.residual(a))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EradicationCheck {
    pub feasible: bool,
    pub best_product: f64,
    pub argmax: f64,
}

/// Maximizes `g(M − a) h(a)` over `[0, M]` by golden-section search on its
/// logarithm, which is concave.
pub fn eradication_check(prob: &InvestmentProblem) -> EradicationCheck {
    let m = prob.budget;
    let (argmax, _) = golden_section_max(|a| prob.product(a).ln(), 0.0, m, 1e-13 * m.max(1.0));
    let best_product = prob.product(argmax);
    EradicationCheck { feasible: best_product >= prob.beta - prob.alpha, best_product, argmax }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SolutionCase {
    #[serde(rename = "INTERIOR_FOC")]
    InteriorFoc,
    #[serde(rename = "SATURATION")]
    Saturation,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InvestmentSolution {
    pub a_star: f64,
    pub b_star: f64,
    pub case: SolutionCase,
    pub foc_residual: f64,
    #[serde(rename = "predicted_L")]
    pub predicted_l: f64,
    pub eradication_feasible: bool,
    pub product: f64,
    /// `t`; null in JSON when the active fraction never saturates.
    pub saturation_point: f64,
}

/// Unique optimal allocation.
///
/// With saturation point `t ≥ M` the optimum is the root of the FOC residual
/// on `(0, M)`. With `t < M` it is the FOC root on `(0, t]` when
/// `g'(M − t) ≥ g(M − t) ĥ'(t)`, otherwise the saturated split `(t, M − t)`.
/// The same allocation maximizes `h g`, so it also eradicates whenever
/// eradication is feasible; `predicted_L` is then 0.
pub fn solve(prob: &InvestmentProblem) -> Result<InvestmentSolution> {
    let check = eradication_check(prob);
    let m = prob.budget;
    let t = prob.h.saturation();
    let root_below = |hi: f64| bisect_decreasing(|a| prob.residual(a), 0.0, hi, BISECTION_TOL, BISECTION_MAX_ITER);

    let (a_star, case) = if t >= m {
        (root_below(m)?, SolutionCase::InteriorFoc)
    } else {
        let b = m - t;
        // decided by the one-sided derivative of the base curve at t
        if prob.g.derivative(b) >= prob.g.value(b) * prob.h.base_derivative(t) {
            (root_below(t)?, SolutionCase::InteriorFoc)
        } else {
            (t, SolutionCase::Saturation)
        }
    };
    let b_star = m - a_star;
    // exact, so a_star + b_star == M
    let a_star = m - b_star;
    let product = prob.product(a_star);
    let feasible = check.feasible || product >= prob.beta - prob.alpha;
    Ok(InvestmentSolution {
        a_star,
        b_star,
        case,
        foc_residual: prob.residual(a_star),
        predicted_l: if feasible { 0.0 } else { prob.limiting_infected(a_star) },
        eradication_feasible: feasible,
        product,
        saturation_point: t,
    })
}
