//! The eight parametric model families.
//!
//! VG is parameterised by `(σ, θ, κ)` as Brownian motion with drift `θ` and
//! volatility `σ`, time-changed by a gamma subordinator with unit mean rate
//! and variance rate `κ`. Its Lévy measure is the CGMY measure with `Y = 0`,
//! `C = 1/κ` and `(G, M)` from [`exponents::vg_rates`].

pub mod exponents;
pub mod measures;

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::levy::{CharacteristicFunction, JumpLaw, LevyMeasure, LevyTriplet, Strip, Truncation};
use crate::numerics::norm_pdf;
use crate::numerics::special::{bessel_k_real_scaled, ln_gamma_complex};
use measures::{CgmyLevy, GhLevy, MeixnerLevy, NigLevy};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "lowercase", deny_unknown_fields)]
pub enum ModelParams {
    Bs {
        mu: f64,
        sigma: f64,
    },
    Merton {
        mu: f64,
        sigma: f64,
        lambda: f64,
        mu_j: f64,
        sigma_j: f64,
    },
    Kou {
        mu: f64,
        sigma: f64,
        lambda: f64,
        p: f64,
        theta1: f64,
        theta2: f64,
    },
    Vg {
        sigma: f64,
        theta: f64,
        kappa: f64,
    },
    Nig {
        alpha: f64,
        beta: f64,
        delta: f64,
        mu: f64,
    },
    Gh {
        alpha: f64,
        beta: f64,
        delta: f64,
        mu: f64,
        lambda: f64,
    },
    Cgmy {
        c: f64,
        g: f64,
        m: f64,
        y: f64,
    },
    Meixner {
        alpha: f64,
        beta: f64,
        delta: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Bs,
    Merton,
    Kou,
    Vg,
    Nig,
    Gh,
    Cgmy,
    Meixner,
}

impl Family {
    pub const ALL: [Family; 8] = [
        Family::Bs,
        Family::Merton,
        Family::Kou,
        Family::Vg,
        Family::Nig,
        Family::Gh,
        Family::Cgmy,
        Family::Meixner,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Family::Bs => "bs",
            Family::Merton => "merton",
            Family::Kou => "kou",
            Family::Vg => "vg",
            Family::Nig => "nig",
            Family::Gh => "gh",
            Family::Cgmy => "cgmy",
            Family::Meixner => "meixner",
        }
    }

    pub fn parse(s: &str) -> Result<Family> {
        Family::ALL
            .into_iter()
            .find(|f| f.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidParameter(format!("unknown model family '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub mean: f64,
    pub variance: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub skewness: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kurtosis: Option<f64>,
}

fn check(ok: bool, what: &str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidParameter(what.into()))
    }
}

impl ModelParams {
    pub fn family(&self) -> Family {
        match self {
            ModelParams::Bs { .. } => Family::Bs,
            ModelParams::Merton { .. } => Family::Merton,
            ModelParams::Kou { .. } => Family::Kou,
            ModelParams::Vg { .. } => Family::Vg,
            ModelParams::Nig { .. } => Family::Nig,
            ModelParams::Gh { .. } => Family::Gh,
            ModelParams::Cgmy { .. } => Family::Cgmy,
            ModelParams::Meixner { .. } => Family::Meixner,
        }
    }

    /// Parameters in a fixed order, as used by the calibrators.
    pub fn to_vec(&self) -> Vec<f64> {
        match *self {
            ModelParams::Bs { mu, sigma } => vec![mu, sigma],
            ModelParams::Merton {
                mu,
                sigma,
                lambda,
                mu_j,
                sigma_j,
            } => vec![mu, sigma, lambda, mu_j, sigma_j],
            ModelParams::Kou {
                mu,
                sigma,
                lambda,
                p,
                theta1,
                theta2,
            } => vec![mu, sigma, lambda, p, theta1, theta2],
            ModelParams::Vg {
                sigma,
                theta,
                kappa,
            } => vec![sigma, theta, kappa],
            ModelParams::Nig {
                alpha,
                beta,
                delta,
                mu,
            } => vec![alpha, beta, delta, mu],
            ModelParams::Gh {
                alpha,
                beta,
                delta,
                mu,
                lambda,
            } => vec![alpha, beta, delta, mu, lambda],
            ModelParams::Cgmy { c, g, m, y } => vec![c, g, m, y],
            ModelParams::Meixner { alpha, beta, delta } => vec![alpha, beta, delta],
        }
    }

    pub fn from_vec(family: Family, v: &[f64]) -> Result<ModelParams> {
        let names = Self::param_names(family);
        if v.len() != names.len() {
            return Err(Error::ParameterMismatch(format!(
                "{} takes {} parameters, got {}",
                family.name(),
                names.len(),
                v.len()
            )));
        }
        Ok(match family {
            Family::Bs => ModelParams::Bs {
                mu: v[0],
                sigma: v[1],
            },
            Family::Merton => ModelParams::Merton {
                mu: v[0],
                sigma: v[1],
                lambda: v[2],
                mu_j: v[3],
                sigma_j: v[4],
            },
            Family::Kou => ModelParams::Kou {
                mu: v[0],
                sigma: v[1],
                lambda: v[2],
                p: v[3],
                theta1: v[4],
                theta2: v[5],
            },
            Family::Vg => ModelParams::Vg {
                sigma: v[0],
                theta: v[1],
                kappa: v[2],
            },
            Family::Nig => ModelParams::Nig {
                alpha: v[0],
                beta: v[1],
                delta: v[2],
                mu: v[3],
            },
            Family::Gh => ModelParams::Gh {
                alpha: v[0],
                beta: v[1],
                delta: v[2],
                mu: v[3],
                lambda: v[4],
            },
            Family::Cgmy => ModelParams::Cgmy {
                c: v[0],
                g: v[1],
                m: v[2],
                y: v[3],
            },
            Family::Meixner => ModelParams::Meixner {
                alpha: v[0],
                beta: v[1],
                delta: v[2],
            },
        })
    }

    pub fn param_names(family: Family) -> &'static [&'static str] {
        match family {
            Family::Bs => &["mu", "sigma"],
            Family::Merton => &["mu", "sigma", "lambda", "mu_j", "sigma_j"],
            Family::Kou => &["mu", "sigma", "lambda", "p", "theta1", "theta2"],
            Family::Vg => &["sigma", "theta", "kappa"],
            Family::Nig => &["alpha", "beta", "delta", "mu"],
            Family::Gh => &["alpha", "beta", "delta", "mu", "lambda"],
            Family::Cgmy => &["c", "g", "m", "y"],
            Family::Meixner => &["alpha", "beta", "delta"],
        }
    }

    /// Index of the location parameter, for families that have one.
    pub fn location_index(family: Family) -> Option<usize> {
        match family {
            Family::Bs | Family::Merton | Family::Kou => Some(0),
            Family::Nig | Family::Gh => Some(3),
            Family::Vg | Family::Cgmy | Family::Meixner => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.to_vec().iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "non-finite parameter in {self:?}"
            )));
        }
        match *self {
            ModelParams::Bs { sigma, .. } => check(sigma > 0.0, "BS needs sigma > 0"),
            ModelParams::Merton {
                sigma,
                lambda,
                sigma_j,
                ..
            } => check(
                sigma >= 0.0 && lambda >= 0.0 && sigma_j > 0.0,
                "Merton needs sigma >= 0, lambda >= 0, sigma_j > 0",
            ),
            ModelParams::Kou {
                sigma,
                lambda,
                p,
                theta1,
                theta2,
                ..
            } => check(
                sigma >= 0.0
                    && lambda >= 0.0
                    && (0.0..=1.0).contains(&p)
                    && theta1 > 0.0
                    && theta2 > 0.0,
                "Kou needs sigma >= 0, lambda >= 0, p in [0,1], theta1 > 0, theta2 > 0",
            ),
            ModelParams::Vg { sigma, kappa, .. } => {
                check(sigma > 0.0 && kappa > 0.0, "VG needs sigma > 0, kappa > 0")
            }
            ModelParams::Nig {
                alpha, beta, delta, ..
            }
            | ModelParams::Gh {
                alpha, beta, delta, ..
            } => check(
                alpha > 0.0 && beta.abs() < alpha && delta > 0.0,
                "NIG/GH need alpha > 0, |beta| < alpha, delta > 0",
            ),
            ModelParams::Cgmy { c, g, m, y } => check(
                c > 0.0 && g > 0.0 && m > 0.0 && y < 2.0,
                "CGMY needs C, G, M > 0 and Y < 2",
            ),
            ModelParams::Meixner { alpha, beta, delta } => check(
                alpha > 0.0 && beta.abs() < PI && delta > 0.0,
                "Meixner needs alpha > 0, -pi < beta < pi, delta > 0",
            ),
        }
    }

    /// Maximal interval of `p` with `E[e^{pL_1}] < ∞`.
    pub fn moment_strip(&self) -> Strip {
        match *self {
            ModelParams::Bs { .. } | ModelParams::Merton { .. } => Strip::real_line(),
            ModelParams::Kou {
                lambda,
                p,
                theta1,
                theta2,
                ..
            } => {
                if lambda == 0.0 {
                    Strip::real_line()
                } else {
                    JumpLaw::DoubleExponential { p, theta1, theta2 }.exp_strip()
                }
            }
            ModelParams::Vg {
                sigma,
                theta,
                kappa,
            } => {
                let (g, m) = exponents::vg_rates(sigma, theta, kappa);
                Strip::open(-g, m)
            }
            ModelParams::Nig { alpha, beta, .. } => Strip::closed(-alpha - beta, alpha - beta),
            ModelParams::Gh {
                alpha,
                beta,
                lambda,
                ..
            } => {
                let closed = lambda < 0.0;
                Strip {
                    lo: -alpha - beta,
                    hi: alpha - beta,
                    lo_closed: closed,
                    hi_closed: closed,
                }
            }
            ModelParams::Cgmy { c, g, m, y } => CgmyLevy { c, g, m, y }.exp_strip_value(),
            ModelParams::Meixner { alpha, beta, .. } => {
                Strip::open((-PI - beta) / alpha, (PI - beta) / alpha)
            }
        }
    }

    fn check_strip(&self, u: Complex64) -> Result<()> {
        if u.im == 0.0 {
            return Ok(());
        }
        let s = self.moment_strip();
        if s.contains(-u.im) {
            Ok(())
        } else {
            Err(Error::StripViolation(format!(
                "-Im(u) = {} outside {} strip {s}",
                -u.im,
                self.family().name()
            )))
        }
    }

    /// `ψ(u) = log E[e^{iuL_1}]` in closed form.
    pub fn exponent(&self, u: Complex64) -> Result<Complex64> {
        self.check_strip(u)?;
        if u == Complex64::new(0.0, 0.0) {
            return Ok(u);
        }
        let i = Complex64::i();
        Ok(match *self {
            ModelParams::Bs { mu, sigma } => i * mu * u - 0.5 * sigma * sigma * u * u,
            ModelParams::Merton {
                mu,
                sigma,
                lambda,
                mu_j,
                sigma_j,
            } => {
                let jump = (i * mu_j * u - 0.5 * sigma_j * sigma_j * u * u).exp() - 1.0;
                i * mu * u - 0.5 * sigma * sigma * u * u + lambda * jump
            }
            ModelParams::Kou {
                mu,
                sigma,
                lambda,
                p,
                theta1,
                theta2,
            } => {
                let jump =
                    p * theta1 / (theta1 - i * u) + (1.0 - p) * theta2 / (theta2 + i * u) - 1.0;
                i * mu * u - 0.5 * sigma * sigma * u * u + lambda * jump
            }
            ModelParams::Vg {
                sigma,
                theta,
                kappa,
            } => exponents::vg(sigma, theta, kappa, u),
            ModelParams::Nig {
                alpha,
                beta,
                delta,
                mu,
            } => i * mu * u + exponents::nig(alpha, beta, delta, u),
            ModelParams::Gh {
                alpha,
                beta,
                delta,
                mu,
                lambda,
            } => i * mu * u + exponents::gh(alpha, beta, delta, lambda, u)?,
            ModelParams::Cgmy { c, g, m, y } => exponents::cgmy(c, g, m, y, u),
            ModelParams::Meixner { alpha, beta, delta } => {
                exponents::meixner(alpha, beta, delta, u)
            }
        })
    }

    /// `E[e^{iuL_t}] = e^{tψ(u)}`.
    pub fn cf(&self, t: f64, u: Complex64) -> Result<Complex64> {
        if t == 0.0 {
            self.check_strip(u)?;
            return Ok(Complex64::new(1.0, 0.0));
        }
        Ok((t * self.exponent(u)?).exp())
    }

    /// `κ(p) = log E[e^{pL_1}]`.
    pub fn cumulant(&self, p: f64) -> Result<f64> {
        Ok(self.exponent(Complex64::new(0.0, -p))?.re)
    }

    pub fn triplet(&self) -> Result<LevyTriplet> {
        self.validate()?;
        let mean = self.moments()?.mean;
        let (c, nu) = match *self {
            ModelParams::Bs { sigma, .. } => (sigma * sigma, LevyMeasure::Zero),
            ModelParams::Merton {
                sigma,
                lambda,
                mu_j,
                sigma_j,
                ..
            } => (
                sigma * sigma,
                LevyMeasure::finite(
                    lambda,
                    JumpLaw::Normal {
                        mean: mu_j,
                        sd: sigma_j,
                    },
                )?,
            ),
            ModelParams::Kou {
                sigma,
                lambda,
                p,
                theta1,
                theta2,
                ..
            } => (
                sigma * sigma,
                LevyMeasure::finite(lambda, JumpLaw::DoubleExponential { p, theta1, theta2 })?,
            ),
            ModelParams::Vg {
                sigma,
                theta,
                kappa,
            } => {
                let (g, m) = exponents::vg_rates(sigma, theta, kappa);
                (
                    0.0,
                    LevyMeasure::Density(Arc::new(CgmyLevy {
                        c: 1.0 / kappa,
                        g,
                        m,
                        y: 0.0,
                    })),
                )
            }
            ModelParams::Nig {
                alpha, beta, delta, ..
            } => (
                0.0,
                LevyMeasure::Density(Arc::new(NigLevy { alpha, beta, delta })),
            ),
            ModelParams::Gh {
                alpha,
                beta,
                delta,
                lambda,
                ..
            } => (
                0.0,
                LevyMeasure::Density(Arc::new(GhLevy {
                    alpha,
                    beta,
                    delta,
                    lambda,
                })),
            ),
            ModelParams::Cgmy { c, g, m, y } => {
                (0.0, LevyMeasure::Density(Arc::new(CgmyLevy { c, g, m, y })))
            }
            ModelParams::Meixner { alpha, beta, delta } => (
                0.0,
                LevyMeasure::Density(Arc::new(MeixnerLevy { alpha, beta, delta })),
            ),
        };
        LevyTriplet::new(mean, c, nu, Truncation::CompensateAll)
    }

    /// Density of `L_t`.
    pub fn density(&self, t: f64, x: f64) -> Result<f64> {
        self.validate()?;
        if !(t > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "density needs t > 0, got {t}"
            )));
        }
        match *self {
            ModelParams::Bs { mu, sigma } => {
                let s = sigma * t.sqrt();
                Ok(norm_pdf((x - mu * t) / s) / s)
            }
            ModelParams::Nig {
                alpha,
                beta,
                delta,
                mu,
            } => Ok(nig_density(alpha, beta, delta * t, mu * t, x)),
            ModelParams::Gh {
                alpha,
                beta,
                delta,
                mu,
                lambda,
            } => {
                if t != 1.0 {
                    return Err(Error::DensityUnknown(
                        "GH density is closed-form only at t = 1".into(),
                    ));
                }
                gh_ln_density(alpha, beta, delta, mu, lambda, x).map(f64::exp)
            }
            ModelParams::Meixner { alpha, beta, delta } => {
                Ok(meixner_density(alpha, beta, delta * t, x))
            }
            _ => Err(Error::DensityUnknown(format!(
                "the density of L_t is not known in closed form for {}",
                self.family().name()
            ))),
        }
    }

    /// Log-density of `L_t`, accurate far in the tails.
    pub fn ln_density(&self, t: f64, x: f64) -> Result<f64> {
        match *self {
            ModelParams::Nig {
                alpha,
                beta,
                delta,
                mu,
            } => {
                self.validate()?;
                Ok(nig_ln_density(alpha, beta, delta * t, mu * t, x))
            }
            ModelParams::Gh {
                alpha,
                beta,
                delta,
                mu,
                lambda,
            } if t == 1.0 => {
                self.validate()?;
                gh_ln_density(alpha, beta, delta, mu, lambda, x)
            }
            ModelParams::Bs { mu, sigma } if t > 0.0 => {
                self.validate()?;
                let s = sigma * t.sqrt();
                Ok(-0.5 * ((x - mu * t) / s).powi(2) - (s * (2.0 * PI).sqrt()).ln())
            }
            ModelParams::Meixner { alpha, beta, delta } => {
                self.validate()?;
                Ok(meixner_ln_density(alpha, beta, delta * t, x))
            }
            _ => self.density(t, x).map(f64::ln),
        }
    }

    pub fn moments(&self) -> Result<Moments> {
        let plain = |mean, variance| Moments {
            mean,
            variance,
            skewness: None,
            kurtosis: None,
        };
        Ok(match *self {
            ModelParams::Bs { mu, sigma } => Moments {
                mean: mu,
                variance: sigma * sigma,
                skewness: Some(0.0),
                kurtosis: Some(3.0),
            },
            ModelParams::Merton {
                mu,
                sigma,
                lambda,
                mu_j,
                sigma_j,
            } => plain(
                mu + lambda * mu_j,
                sigma * sigma + lambda * mu_j * mu_j + lambda * sigma_j * sigma_j,
            ),
            ModelParams::Kou {
                mu,
                sigma,
                lambda,
                p,
                theta1,
                theta2,
            } => plain(
                mu + lambda * p / theta1 - lambda * (1.0 - p) / theta2,
                sigma * sigma
                    + 2.0 * lambda * p / (theta1 * theta1)
                    + 2.0 * lambda * (1.0 - p) / (theta2 * theta2),
            ),
            ModelParams::Vg {
                sigma,
                theta,
                kappa,
            } => plain(theta, sigma * sigma + theta * theta * kappa),
            ModelParams::Nig {
                alpha,
                beta,
                delta,
                mu,
            } => {
                let g = (alpha * alpha - beta * beta).sqrt();
                plain(
                    mu + beta * delta / g,
                    delta / g + beta * beta * delta / g.powi(3),
                )
            }
            ModelParams::Gh {
                alpha,
                beta,
                delta,
                mu,
                lambda,
            } => {
                let zeta = delta * (alpha * alpha - beta * beta).sqrt();
                let k0 = bessel_k_real_scaled(lambda, zeta)?;
                let r1 = bessel_k_real_scaled(lambda + 1.0, zeta)? / k0;
                let r2 = bessel_k_real_scaled(lambda + 2.0, zeta)? / k0;
                let d2 = delta * delta;
                plain(
                    mu + beta * d2 / zeta * r1,
                    d2 / zeta * r1 + beta * beta * d2 * d2 / (zeta * zeta) * (r2 - r1 * r1),
                )
            }
            ModelParams::Cgmy { c, g, m, y } => plain(
                exponents::cgmy_mean(c, g, m, y),
                c * libm::tgamma(2.0 - y) * (m.powf(y - 2.0) + g.powf(y - 2.0)),
            ),
            ModelParams::Meixner { alpha, beta, delta } => {
                let cb = (beta / 2.0).cos();
                plain(
                    alpha * delta * (beta / 2.0).tan(),
                    alpha * alpha * delta / (2.0 * cb * cb),
                )
            }
        })
    }

    /// Whether paths can be simulated exactly on a grid.
    pub fn simulable(&self) -> bool {
        matches!(
            self.family(),
            Family::Bs | Family::Merton | Family::Kou | Family::Nig | Family::Vg
        )
    }
}

impl CgmyLevy {
    fn exp_strip_value(&self) -> Strip {
        crate::levy::LevyDensity::exp_strip(self).expect("CGMY strip is analytic")
    }
}

impl CharacteristicFunction for ModelParams {
    fn cf(&self, t: f64, u: Complex64) -> Result<Complex64> {
        ModelParams::cf(self, t, u)
    }
}

/// `NIG(α, β, δ₁+δ₂, μ₁+μ₂)`, the law of the sum of independent NIG variables.
pub fn nig_convolve(a: &ModelParams, b: &ModelParams) -> Result<ModelParams> {
    match (*a, *b) {
        (
            ModelParams::Nig {
                alpha: a1,
                beta: b1,
                delta: d1,
                mu: m1,
            },
            ModelParams::Nig {
                alpha: a2,
                beta: b2,
                delta: d2,
                mu: m2,
            },
        ) => {
            if a1 != a2 || b1 != b2 {
                return Err(Error::ParameterMismatch(format!(
                    "NIG convolution needs equal alpha and beta, got ({a1}, {b1}) and ({a2}, {b2})"
                )));
            }
            Ok(ModelParams::Nig {
                alpha: a1,
                beta: b1,
                delta: d1 + d2,
                mu: m1 + m2,
            })
        }
        _ => Err(Error::ParameterMismatch(
            "NIG convolution needs two NIG parameter sets".into(),
        )),
    }
}

fn nig_ln_density(alpha: f64, beta: f64, delta: f64, mu: f64, x: f64) -> f64 {
    let g = (alpha * alpha - beta * beta).sqrt();
    let q = (delta * delta + (x - mu).powi(2)).sqrt();
    let z = alpha * q;
    let k = bessel_k_real_scaled(1.0, z).map_or(f64::NAN, f64::ln);
    (alpha / PI).ln() + delta * g + beta * (x - mu) + k - z + (delta / q).ln()
}

fn nig_density(alpha: f64, beta: f64, delta: f64, mu: f64, x: f64) -> f64 {
    nig_ln_density(alpha, beta, delta, mu, x).exp()
}

/// The normalising constant carries `δ^λ`; without it the density does not integrate to 1.
fn gh_ln_density(alpha: f64, beta: f64, delta: f64, mu: f64, lambda: f64, x: f64) -> Result<f64> {
    let g = (alpha * alpha - beta * beta).sqrt();
    let zeta = delta * g;
    let ln_c = lambda * g.ln()
        - 0.5 * (2.0 * PI).ln()
        - (lambda - 0.5) * alpha.ln()
        - lambda * delta.ln()
        - (bessel_k_real_scaled(lambda, zeta)?.ln() - zeta);
    let q = (delta * delta + (x - mu).powi(2)).sqrt();
    let z = alpha * q;
    Ok(
        ln_c + (lambda - 0.5) * q.ln() + bessel_k_real_scaled(lambda - 0.5, z)?.ln() - z
            + beta * (x - mu),
    )
}

fn meixner_ln_density(alpha: f64, beta: f64, delta: f64, x: f64) -> f64 {
    let lg = ln_gamma_complex(Complex64::new(delta, x / alpha)).re;
    2.0 * delta * (2.0 * (beta / 2.0).cos()).ln()
        - (2.0 * alpha * PI).ln()
        - libm::lgamma(2.0 * delta)
        + beta * x / alpha
        + 2.0 * lg
}

fn meixner_density(alpha: f64, beta: f64, delta: f64, x: f64) -> f64 {
    meixner_ln_density(alpha, beta, delta, x).exp()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nig_cf_value() {
        let m = ModelParams::Nig {
            alpha: 2.0,
            beta: 0.0,
            delta: 1.0,
            mu: 0.0,
        };
        let v = m.cf(1.0, Complex64::new(1.0, 0.0)).unwrap();
        assert!((v.re - (2.0 - 5f64.sqrt()).exp()).abs() < 1e-15 && v.im.abs() < 1e-15);
    }

    #[test]
    fn moments_examples() {
        let m = ModelParams::Merton {
            mu: 0.1,
            sigma: 0.2,
            lambda: 3.0,
            mu_j: -0.05,
            sigma_j: 0.1,
        };
        assert!((m.moments().unwrap().mean + 0.05).abs() < 1e-15);
        let n = ModelParams::Nig {
            alpha: 2.0,
            beta: 1.0,
            delta: 1.0,
            mu: 0.0,
        };
        assert!((n.moments().unwrap().mean - 1.0 / 3f64.sqrt()).abs() < 1e-15);
        assert_eq!(
            ModelParams::Bs {
                mu: 0.0,
                sigma: 0.3
            }
            .moments()
            .unwrap()
            .kurtosis,
            Some(3.0)
        );
    }

    #[test]
    fn strips() {
        let k = ModelParams::Kou {
            mu: 0.0,
            sigma: 0.1,
            lambda: 1.0,
            p: 0.4,
            theta1: 3.0,
            theta2: 2.0,
        };
        assert_eq!(k.moment_strip(), Strip::open(-2.0, 3.0));
        let c = ModelParams::Cgmy {
            c: 1.0,
            g: 5.0,
            m: 10.0,
            y: 0.5,
        };
        let s = c.moment_strip();
        assert_eq!((s.lo, s.hi), (-5.0, 10.0));
        assert!(ModelParams::Bs {
            mu: 0.0,
            sigma: 0.2
        }
        .moment_strip()
        .lo
        .is_infinite());
        let n = ModelParams::Nig {
            alpha: 3.0,
            beta: 1.0,
            delta: 1.0,
            mu: 0.0,
        };
        assert!(n.cumulant(2.0).unwrap().is_finite());
        assert!(matches!(n.cumulant(2.01), Err(Error::StripViolation(_))));
    }

    #[test]
    fn density_unknown_for_jump_families() {
        let k = ModelParams::Kou {
            mu: 0.0,
            sigma: 0.1,
            lambda: 1.0,
            p: 0.4,
            theta1: 3.0,
            theta2: 2.0,
        };
        assert!(matches!(k.density(1.0, 0.0), Err(Error::DensityUnknown(_))));
        let b = ModelParams::Bs {
            mu: 0.0,
            sigma: 1.0,
        };
        assert!((b.density(1.0, 0.0).unwrap() - 0.398_942_280_401_432_7).abs() < 1e-15);
    }

    #[test]
    fn convolution() {
        let a = ModelParams::Nig {
            alpha: 2.0,
            beta: 0.0,
            delta: 1.0,
            mu: 0.0,
        };
        assert_eq!(
            nig_convolve(&a, &a).unwrap(),
            ModelParams::Nig {
                alpha: 2.0,
                beta: 0.0,
                delta: 2.0,
                mu: 0.0
            }
        );
        let b = ModelParams::Nig {
            alpha: 2.5,
            beta: 0.0,
            delta: 1.0,
            mu: 0.0,
        };
        assert!(matches!(
            nig_convolve(&a, &b),
            Err(Error::ParameterMismatch(_))
        ));
    }

    #[test]
    fn json_round_trip_rejects_unknown_keys() {
        let m = ModelParams::Gh {
            alpha: 2.0,
            beta: 0.1,
            delta: 0.5,
            mu: 0.0,
            lambda: 1.0,
        };
        let s = serde_json::to_string(&m).unwrap();
        assert!(s.contains("\"model\":\"gh\""));
        assert_eq!(serde_json::from_str::<ModelParams>(&s).unwrap(), m);
        assert!(serde_json::from_str::<ModelParams>(
            r#"{"model":"bs","mu":0,"sigma":0.2,"extra":1}"#
        )
        .is_err());
    }
}
