use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::levy::Strip;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PayoffKind {
    Call,
    Put,
    DigitalCall,
    DigitalPut,
}

impl PayoffKind {
    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "call" => Ok(Self::Call),
            "put" => Ok(Self::Put),
            "digital-call" | "digital_call" | "digitalcall" => Ok(Self::DigitalCall),
            "digital-put" | "digital_put" | "digitalput" => Ok(Self::DigitalPut),
            _ => Err(Error::InvalidParameter(format!("unknown payoff '{s}'"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Call => "call",
            Self::Put => "put",
            Self::DigitalCall => "digital-call",
            Self::DigitalPut => "digital-put",
        }
    }

    /// Admissible real parts of `z` for the transform of `x ↦ g(e^{-x})`.
    pub fn damping_strip(&self) -> Strip {
        match self {
            Self::Call => Strip::open(f64::NEG_INFINITY, -1.0),
            Self::DigitalCall => Strip::open(f64::NEG_INFINITY, 0.0),
            Self::Put | Self::DigitalPut => Strip::open(0.0, f64::INFINITY),
        }
    }

    pub fn default_damping(&self) -> f64 {
        match self {
            Self::Call => -1.25,
            Self::Put => 0.25,
            Self::DigitalCall => -0.5,
            Self::DigitalPut => 0.5,
        }
    }
}

/// A European payoff `g(S_T)` with strike `K > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PayoffSpec {
    pub kind: PayoffKind,
    pub strike: f64,
}

impl PayoffSpec {
    pub fn new(kind: PayoffKind, strike: f64) -> Result<Self> {
        if !(strike > 0.0) || !strike.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "strike must be positive, got {strike}"
            )));
        }
        Ok(Self { kind, strike })
    }

    pub fn call(strike: f64) -> Result<Self> {
        Self::new(PayoffKind::Call, strike)
    }

    pub fn put(strike: f64) -> Result<Self> {
        Self::new(PayoffKind::Put, strike)
    }

    pub fn value(&self, s: f64) -> f64 {
        let k = self.strike;
        match self.kind {
            PayoffKind::Call => (s - k).max(0.0),
            PayoffKind::Put => (k - s).max(0.0),
            PayoffKind::DigitalCall => f64::from(s > k),
            PayoffKind::DigitalPut => f64::from(s < k),
        }
    }

    pub fn damping_strip(&self) -> Strip {
        self.kind.damping_strip()
    }

    /// `∫ e^{-zx} g(e^{-x}) dx`.
    pub fn laplace(&self, z: Complex64) -> Result<Complex64> {
        self.shifted_laplace(z, 0.0)
    }

    /// `e^{zζ} ∫ e^{-zx} g(e^{-x}) dx`, formed in log space.
    pub fn shifted_laplace(&self, z: Complex64, zeta: f64) -> Result<Complex64> {
        let s = self.damping_strip();
        if !s.contains(z.re) {
            return Err(Error::StripViolation(format!(
                "Re z = {} outside the {} strip {s}",
                z.re,
                self.kind.name()
            )));
        }
        let lk = self.strike.ln();
        Ok(match self.kind {
            PayoffKind::Call | PayoffKind::Put => {
                ((1.0 + z) * lk + z * zeta).exp() / (z * (z + 1.0))
            }
            PayoffKind::DigitalCall => -(z * (lk + zeta)).exp() / z,
            PayoffKind::DigitalPut => (z * (lk + zeta)).exp() / z,
        })
    }

    /// `[lower, upper]` no-arbitrage bounds on the price.
    pub fn price_bounds(&self, s0: f64, r: f64, div: f64, t: f64) -> (f64, f64) {
        let fwd = s0 * (-div * t).exp();
        let pv_k = self.strike * (-r * t).exp();
        let df = (-r * t).exp();
        match self.kind {
            PayoffKind::Call => ((fwd - pv_k).max(0.0), fwd),
            PayoffKind::Put => ((pv_k - fwd).max(0.0), pv_k),
            PayoffKind::DigitalCall | PayoffKind::DigitalPut => (0.0, df),
        }
    }
}
