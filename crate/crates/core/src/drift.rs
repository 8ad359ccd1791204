use crate::error::{Error, Result};

/// Drift `f` of `dX = f(X) dt + dL`.
#[derive(Debug, Clone, PartialEq)]
pub enum DriftSpec {
    Zero,
    /// Coefficients in ascending degree: `f(x) = sum c_k x^k`.
    Polynomial(Vec<f64>),
}

impl DriftSpec {
    /// `x - x^3`, the gradient of the double-well potential `x^4/4 - x^2/2`.
    pub fn bistable() -> Self {
        DriftSpec::Polynomial(vec![0.0, 1.0, 0.0, -1.0])
    }

    pub fn polynomial(coefficients: Vec<f64>) -> Result<Self> {
        if coefficients.iter().any(|c| !c.is_finite()) {
            return Err(Error::Config(vec![
                "drift coefficients must be finite".to_string(),
            ]));
        }
        Ok(DriftSpec::Polynomial(coefficients))
    }

    pub fn coefficients(&self) -> &[f64] {
        match self {
            DriftSpec::Zero => &[],
            DriftSpec::Polynomial(c) => c,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coefficients().iter().all(|&c| c == 0.0)
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coefficients()
            .iter()
            .rev()
            .fold(0.0, |acc, &c| acc * x + c)
    }

    /// Drift seen in computational coordinates when `x = scale * y + shift`:
    /// `g(y) = f(scale * y + shift) / scale`.
    pub fn rescaled(&self, scale: f64, shift: f64) -> Self {
        let c = self.coefficients();
        if c.is_empty() {
            return DriftSpec::Zero;
        }
        let n = c.len();
        let mut out = vec![0.0; n];
        // (scale y + shift)^k expanded by the binomial theorem
        for (k, &ck) in c.iter().enumerate() {
            let mut binom = 1.0;
            for m in 0..=k {
                out[m] += ck * binom * scale.powi(m as i32) * shift.powi((k - m) as i32);
                binom = binom * (k - m) as f64 / (m + 1) as f64;
            }
        }
        for v in &mut out {
            *v /= scale;
        }
        DriftSpec::Polynomial(out)
    }
}
