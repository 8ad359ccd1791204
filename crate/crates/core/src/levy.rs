//! The symmetric tempered stable jump measure
//! `nu(dy) = C_alpha e^(-lambda |y|) |y|^(-1-alpha) dy` on the real line.

use std::f64::consts::PI;

use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::special::{lower_incomplete_gamma, tempered_tail_weight};

/// Parameters of the tempered stable jump measure.
///
/// Fields are public so test fixtures can build degenerate measures
/// (`c_alpha = 0`); [`TemperedStableParams::new`] enforces the invariants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TemperedStableParams {
    /// Stability index, in `(0,1) ∪ (1,2)`.
    pub alpha: f64,
    /// Tempering rate, `> 0`.
    pub lambda: f64,
    /// Normalization of the measure, `> 0`.
    pub c_alpha: f64,
}

impl TemperedStableParams {
    pub fn new(alpha: f64, lambda: f64, c_alpha: f64) -> Result<Self> {
        let params = Self {
            alpha,
            lambda,
            c_alpha,
        };
        let violations = params.violations();
        if violations.is_empty() {
            Ok(params)
        } else {
            Err(Error::Config(violations))
        }
    }

    /// Uses [`default_c_alpha`] for the normalization.
    pub fn with_default_normalization(alpha: f64, lambda: f64) -> Result<Self> {
        let c_alpha = default_c_alpha(alpha).map_err(|_| {
            Error::Config(vec![alpha_violation(alpha)])
        })?;
        Self::new(alpha, lambda, c_alpha)
    }

    /// Every violated invariant, one message each.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !valid_alpha(self.alpha) {
            out.push(alpha_violation(self.alpha));
        }
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            out.push(format!("lambda must be > 0 (got {})", self.lambda));
        }
        if !(self.c_alpha > 0.0 && self.c_alpha.is_finite()) {
            out.push(format!("c_alpha must be > 0 (got {})", self.c_alpha));
        }
        out
    }

    /// Total mass of jumps longer than `eps`: `2 C_alpha int_eps^inf ...`.
    pub fn large_jump_rate(&self, eps: f64) -> Result<f64> {
        if self.c_alpha == 0.0 {
            return Ok(0.0);
        }
        Ok(2.0 * self.c_alpha * tempered_tail_weight(self.alpha, self.lambda, eps)?)
    }

    /// `int_{|y| <= eps} y^2 nu(dy) = 2 C_alpha lambda^(alpha-2) gamma(2 - alpha, lambda eps)`.
    pub fn small_jump_variance(&self, eps: f64) -> Result<f64> {
        if !(eps > 0.0) {
            return Err(Error::domain(
                "small_jump_variance",
                format!("eps = {eps} must be positive"),
            ));
        }
        let a = 2.0 - self.alpha;
        Ok(2.0
            * self.c_alpha
            * self.lambda.powf(-a)
            * lower_incomplete_gamma(a, self.lambda * eps)?)
    }
}

pub(crate) fn valid_alpha(alpha: f64) -> bool {
    alpha > 0.0 && alpha < 2.0 && alpha != 1.0
}

fn alpha_violation(alpha: f64) -> String {
    format!("alpha must lie in (0,1)∪(1,2) (got {alpha})")
}

/// Jump density `C_alpha e^(-lambda |y|) |y|^(-1-alpha)`.
pub fn levy_density(params: &TemperedStableParams, y: f64) -> Result<f64> {
    if y == 0.0 || !y.is_finite() {
        return Err(Error::domain(
            "levy_density",
            format!("density is singular or undefined at y = {y}"),
        ));
    }
    let r = y.abs();
    Ok(params.c_alpha * (-params.lambda * r).exp() * r.powf(-1.0 - params.alpha))
}

/// Standard normalization of the 1-d symmetric alpha-stable measure,
/// `alpha 2^(alpha-1) Gamma((1+alpha)/2) / (sqrt(pi) Gamma(1 - alpha/2))`.
///
/// With this constant the untempered generator is `-(-Delta)^(alpha/2)`.
pub fn default_c_alpha(alpha: f64) -> Result<f64> {
    if !valid_alpha(alpha) {
        return Err(Error::domain("default_c_alpha", alpha_violation(alpha)));
    }
    Ok(alpha * (alpha - 1.0).exp2() * gamma(0.5 * (1.0 + alpha))
        / (PI.sqrt() * gamma(1.0 - 0.5 * alpha)))
}

/// `int y^2 nu(dy) = 2 C_alpha lambda^(alpha-2) Gamma(2 - alpha)`: the
/// variance of the process grows at this rate per unit time.
pub fn second_moment_rate(params: &TemperedStableParams) -> Result<f64> {
    let violations = params.violations();
    if !violations.is_empty() {
        return Err(Error::Config(violations));
    }
    let a = 2.0 - params.alpha;
    Ok(2.0 * params.c_alpha * params.lambda.powf(-a) * gamma(a))
}
