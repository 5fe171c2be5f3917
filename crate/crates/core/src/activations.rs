//! Scalar activation functions.
//!
//! The double selective activation mixes a narrow rational peak with a wide
//! flat-topped super-Gaussian. The result has three visible response bands:
//! a sharp spike near zero (strong), a plateau around `r` (moderate) and a
//! tail near zero (weak).

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ActivationError {
    #[error("a1 must be positive, got {0}")]
    A1(f64),
    #[error("a2 must be positive, got {0}")]
    A2(f64),
    #[error("r must lie in [0, 1], got {0}")]
    Mix(f64),
}

pub fn sigmoid(t: f64) -> f64 {
    1.0 / (1.0 + (-t).exp())
}

/// `a / (a + x^2)`; equals 1 only at `x = 0`.
pub fn selective_pi(x: f64, a: f64) -> f64 {
    a / (a + x * x)
}

/// `exp(-(x/a)^8)`.
pub fn super_gaussian(x: f64, a: f64) -> f64 {
    (-(x / a).powi(8)).exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DsaParams {
    pub a1: f64,
    pub a2: f64,
    pub r: f64,
}

impl Default for DsaParams {
    fn default() -> Self {
        Self {
            a1: 0.001,
            a2: 0.5,
            r: 0.5,
        }
    }
}

impl DsaParams {
    pub fn new(a1: f64, a2: f64, r: f64) -> Result<Self, ActivationError> {
        let p = Self { a1, a2, r };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), ActivationError> {
        if !(self.a1 > 0.0 && self.a1.is_finite()) {
            return Err(ActivationError::A1(self.a1));
        }
        if !(self.a2 > 0.0 && self.a2.is_finite()) {
            return Err(ActivationError::A2(self.a2));
        }
        if !(0.0..=1.0).contains(&self.r) {
            return Err(ActivationError::Mix(self.r));
        }
        Ok(())
    }
}

/// Double selective activation `(1-r)·π(x, a1) + r·s_g(x, a2)`.
pub fn dsa(x: f64, p: &DsaParams) -> f64 {
    (1.0 - p.r) * selective_pi(x, p.a1) + p.r * super_gaussian(x, p.a2)
}
