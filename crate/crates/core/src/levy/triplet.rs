use std::sync::OnceLock;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::measure::{LevyMeasure, Region};
use super::strip::Strip;
use crate::error::{Error, Result};
use crate::numerics::quad::QuadOptions;
use crate::numerics::{cexpm1, cexpm1_minus_z};

/// Which small jumps the exponent compensates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Truncation {
    /// `e^{iux} - 1 - iux 1_{|x|<1}`
    TruncateUnit,
    /// `e^{iux} - 1 - iux`; needs a finite first moment.
    CompensateAll,
}

/// Radius below which ν-integrals switch to a moment series.
pub const SMALL_JUMP_RADIUS: f64 = 1e-6;

/// The characteristics `(b, c, ν)` of a Lévy process.
#[derive(Debug, Clone)]
pub struct LevyTriplet {
    b: f64,
    c: f64,
    nu: LevyMeasure,
    convention: Truncation,
    tail_mean: OnceLock<std::result::Result<f64, Error>>,
}

impl LevyTriplet {
    pub fn new(b: f64, c: f64, nu: LevyMeasure, convention: Truncation) -> Result<Self> {
        if !(c >= 0.0) || !c.is_finite() || !b.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "need finite b and c >= 0, got b = {b}, c = {c}"
            )));
        }
        let t = Self {
            b,
            c,
            nu,
            convention,
            tail_mean: OnceLock::new(),
        };
        if convention == Truncation::CompensateAll && !super::classify::moment_finite(&t, 1.0)? {
            return Err(Error::InvalidParameter(
                "full compensation requires ∫_{|x|≥1}|x| ν(dx) < ∞".into(),
            ));
        }
        Ok(t)
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn nu(&self) -> &LevyMeasure {
        &self.nu
    }

    pub fn convention(&self) -> Truncation {
        self.convention
    }

    /// `∫_{|x|≥1} x ν(dx)`, computed once.
    pub fn tail_mean(&self) -> Result<f64> {
        self.tail_mean.get_or_init(|| self.nu.tail_mean()).clone()
    }

    /// Drift under the given convention, via `b' = b + ∫_{|x|≥1} x ν(dx)`.
    pub fn drift_in(&self, convention: Truncation) -> Result<f64> {
        Ok(match (self.convention, convention) {
            (a, b) if a == b => self.b,
            (Truncation::TruncateUnit, Truncation::CompensateAll) => self.b + self.tail_mean()?,
            _ => self.b - self.tail_mean()?,
        })
    }

    pub fn with_convention(&self, convention: Truncation) -> Result<Self> {
        LevyTriplet::new(
            self.drift_in(convention)?,
            self.c,
            self.nu.clone(),
            convention,
        )
    }

    /// Same ν and c with a different drift in the current convention.
    pub fn with_drift(&self, b: f64) -> Self {
        Self {
            b,
            c: self.c,
            nu: self.nu.clone(),
            convention: self.convention,
            tail_mean: self.tail_mean.clone(),
        }
    }

    /// Exponents `p` with `E[e^{pL_1}] < ∞`.
    pub fn exp_strip(&self) -> Result<Strip> {
        super::classify::exp_strip(&self.nu)
    }

    fn check_strip(&self, u: Complex64) -> Result<()> {
        if u.im == 0.0 {
            return Ok(());
        }
        let p = -u.im;
        let strip = self.exp_strip()?;
        if strip.contains(p) {
            Ok(())
        } else {
            Err(Error::StripViolation(format!(
                "-Im(u) = {p} outside exponential-moment strip {strip}"
            )))
        }
    }

    fn jump_part(&self, u: Complex64) -> Result<Complex64> {
        let i = Complex64::i();
        match &self.nu {
            LevyMeasure::Zero => Ok(Complex64::new(0.0, 0.0)),
            LevyMeasure::FiniteActivity { intensity, law } => {
                let base = match *law {
                    super::measure::JumpLaw::Point(a) => cexpm1(i * u * a),
                    _ => law.cf(u) - 1.0,
                };
                Ok(match self.convention {
                    Truncation::CompensateAll => *intensity * (base - i * u * law.mean()),
                    Truncation::TruncateUnit => *intensity * (base - i * u * law.partial_mean(1.0)),
                })
            }
            LevyMeasure::Density(_) => match self.nu.compensated_exponent_closed(u) {
                Some(psi_c) => {
                    let psi_c = psi_c?;
                    match self.convention {
                        Truncation::CompensateAll => Ok(psi_c),
                        Truncation::TruncateUnit => match self.tail_mean() {
                            Ok(m) => Ok(psi_c + i * u * m),
                            Err(_) => self.jump_part_by_quadrature(u),
                        },
                    }
                }
                None => self.jump_part_by_quadrature(u),
            },
        }
    }

    fn jump_part_by_quadrature(&self, u: Complex64) -> Result<Complex64> {
        let i = Complex64::i();
        let eps = SMALL_JUMP_RADIUS;
        let full = self.convention == Truncation::CompensateAll;
        let g = |x: f64| {
            let z = i * u * x;
            if full || x.abs() < 1.0 {
                cexpm1_minus_z(z)
            } else {
                cexpm1(z)
            }
        };
        let opts = QuadOptions::abs(1e-11).with_rel(1e-12);
        let outer: Complex64 = self.nu.integrate(g, &Region::outside(eps), opts)?;
        let [m2, m3, m4] = self.nu.small_moments(eps)?;
        let iu = i * u;
        let series = iu * iu / 2.0 * m2 + iu * iu * iu / 6.0 * m3 + iu * iu * iu * iu / 24.0 * m4;
        Ok(outer + series)
    }
}

/// `ψ(u)` with `E[e^{iuL_t}] = e^{tψ(u)}`.
pub fn levy_exponent(t: &LevyTriplet, u: Complex64) -> Result<Complex64> {
    t.check_strip(u)?;
    let i = Complex64::i();
    Ok(i * u * t.b - 0.5 * t.c * u * u + t.jump_part(u)?)
}

/// `ψ(u)` evaluated with quadrature over ν even when a closed form exists.
pub fn levy_exponent_by_quadrature(t: &LevyTriplet, u: Complex64) -> Result<Complex64> {
    t.check_strip(u)?;
    let i = Complex64::i();
    let jumps = match t.nu {
        LevyMeasure::Zero => Complex64::new(0.0, 0.0),
        _ => t.jump_part_by_quadrature(u)?,
    };
    Ok(i * u * t.b - 0.5 * t.c * u * u + jumps)
}

pub fn characteristic_function(t: &LevyTriplet, time: f64, u: Complex64) -> Result<Complex64> {
    if time == 0.0 {
        t.check_strip(u)?;
        return Ok(Complex64::new(1.0, 0.0));
    }
    Ok((time * levy_exponent(t, u)?).exp())
}

/// `κ(p) = log E[e^{pL_1}] = ψ(-ip)`.
pub fn cumulant(t: &LevyTriplet, p: f64) -> Result<f64> {
    let v = levy_exponent(t, Complex64::new(0.0, -p))?;
    if v.im.abs() >= 1e-10 * v.re.abs().max(1.0) {
        return Err(Error::IntegrationFailure(format!(
            "cumulant at {p} has imaginary part {}",
            v.im
        )));
    }
    Ok(v.re)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::levy::measure::JumpLaw;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn brownian_exponent() {
        let t = LevyTriplet::new(0.0, 1.0, LevyMeasure::Zero, Truncation::TruncateUnit).unwrap();
        assert_eq!(levy_exponent(&t, c(1.0, 0.0)).unwrap(), c(-0.5, 0.0));
        assert_eq!(levy_exponent(&t, c(0.0, 0.0)).unwrap(), c(0.0, 0.0));
        let bs = LevyTriplet::new(0.1, 0.04, LevyMeasure::Zero, Truncation::CompensateAll).unwrap();
        assert!((cumulant(&bs, 1.0).unwrap() - 0.12).abs() < 1e-15);
    }

    #[test]
    fn compound_poisson_unit_jumps() {
        let nu = LevyMeasure::finite(2.0, JumpLaw::Point(1.0)).unwrap();
        // jumps at exactly 1 are not compensated under the unit truncation
        let t = LevyTriplet::new(0.0, 0.0, nu, Truncation::TruncateUnit).unwrap();
        let v = levy_exponent(&t, c(std::f64::consts::PI, 0.0)).unwrap();
        assert!((v - c(-4.0, 0.0)).norm() < 1e-14);
        let phi = characteristic_function(&t, 2.0, c(0.7, 0.0)).unwrap();
        let expect = (2.0 * 2.0 * (c(0.0, 0.7).exp() - 1.0)).exp();
        assert!((phi - expect).norm() < 1e-14);
    }

    #[test]
    fn convention_round_trip() {
        let nu = LevyMeasure::finite(1.5, JumpLaw::Normal { mean: 0.4, sd: 0.9 }).unwrap();
        let t = LevyTriplet::new(0.2, 0.1, nu, Truncation::TruncateUnit).unwrap();
        let a = t.with_convention(Truncation::CompensateAll).unwrap();
        for u in [0.3, 1.0, 4.0] {
            let d = levy_exponent(&t, c(u, 0.0)).unwrap() - levy_exponent(&a, c(u, 0.0)).unwrap();
            assert!(d.norm() < 1e-13);
            let q = levy_exponent_by_quadrature(&t, c(u, 0.0)).unwrap();
            assert!((q - levy_exponent(&t, c(u, 0.0)).unwrap()).norm() < 1e-9);
        }
        let back = a.with_convention(Truncation::TruncateUnit).unwrap();
        assert!((back.b() - t.b()).abs() < 1e-15);
    }

    #[test]
    fn strip_violation_reported() {
        let nu = LevyMeasure::finite(
            1.0,
            JumpLaw::DoubleExponential {
                p: 0.5,
                theta1: 3.0,
                theta2: 2.0,
            },
        )
        .unwrap();
        let t = LevyTriplet::new(0.0, 0.0, nu, Truncation::CompensateAll).unwrap();
        assert!(cumulant(&t, 2.9).is_ok());
        assert!(matches!(cumulant(&t, 3.0), Err(Error::StripViolation(_))));
        assert!(matches!(cumulant(&t, -2.5), Err(Error::StripViolation(_))));
    }
}
