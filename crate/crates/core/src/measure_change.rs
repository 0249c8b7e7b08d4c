//! Risk-neutral drift, Esscher transforms and the market price of risk.

use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::levy::classify::exp_strip;
use crate::levy::{
    cumulant, CharacteristicFunction, JumpLaw, LevyDensity, LevyMeasure, LevyTriplet, Region,
    TiltedDensity, Truncation,
};
use crate::models::{exponents, ModelParams};
use crate::numerics::chebyshev_points;
use crate::numerics::quad::QuadOptions;
use crate::numerics::roots::brent;

/// Rates and spot of the market the asset lives in.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarketEnv {
    pub r: f64,
    /// Continuous dividend yield or foreign rate.
    pub div: f64,
    pub s0: f64,
}

impl MarketEnv {
    pub fn new(r: f64, div: f64, s0: f64) -> Result<Self> {
        let env = Self { r, div, s0 };
        env.validate()?;
        Ok(env)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.r >= 0.0 && self.r.is_finite()) || !(self.div >= 0.0 && self.div.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "need r >= 0 and div >= 0, got r = {}, div = {}",
                self.r, self.div
            )));
        }
        if !(self.s0 > 0.0 && self.s0.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "spot must be positive, got {}",
                self.s0
            )));
        }
        Ok(())
    }

    /// `r - δ`
    pub fn carry(&self) -> f64 {
        self.r - self.div
    }
}

/// Tilts `e^{βL^c}` on the continuous part and `e^{αL^d}` on the jump part.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EsscherParams {
    pub alpha_jump: f64,
    pub beta_cont: f64,
}

impl EsscherParams {
    pub fn both(theta: f64) -> Self {
        Self {
            alpha_jump: theta,
            beta_cont: theta,
        }
    }
}

/// `∫(e^x - 1 - x) ν(dx)`
fn exp_compensator(nu: &LevyMeasure) -> Result<f64> {
    let t = LevyTriplet::new(0.0, 0.0, nu.clone(), Truncation::CompensateAll)?;
    cumulant(&t, 1.0)
}

/// `b̄ = r - δ - c/2 - ∫(e^x - 1 - x) ν(dx)`, the drift under full compensation.
pub fn risk_neutral_drift(c: f64, nu: &LevyMeasure, env: &MarketEnv) -> Result<f64> {
    Ok(env.carry() - c / 2.0 - exp_compensator(nu)?)
}

/// `b - (r - δ - c/2 - ∫(e^x - 1 - x) ν(dx))`, written as `κ(1) - (r - δ)`.
pub fn martingale_residual(triplet: &LevyTriplet, env: &MarketEnv) -> Result<f64> {
    Ok(cumulant(triplet, 1.0)? - env.carry())
}

/// `∫ h(x) (e^{αx} - 1) ν(dx)` with `h(x) = x` or `x 1_{|x|<1}`.
fn tilt_shift(nu: &LevyMeasure, alpha: f64, truncated: bool) -> Result<f64> {
    if alpha == 0.0 {
        return Ok(0.0);
    }
    match nu {
        LevyMeasure::Zero => Ok(0.0),
        LevyMeasure::FiniteActivity { intensity, law } => {
            let m = law.mgf(alpha);
            let tilted = law.tilt(alpha);
            Ok(if truncated {
                intensity * (m * tilted.partial_mean(1.0) - law.partial_mean(1.0))
            } else {
                intensity * (m * tilted.mean() - law.mean())
            })
        }
        LevyMeasure::Density(_) => {
            let region = if truncated {
                Region::inside(1.0)
            } else {
                Region::all()
            };
            nu.integrate(
                |x| x * (alpha * x).exp_m1(),
                &region,
                QuadOptions::abs(1e-14).with_rel(1e-13),
            )
        }
    }
}

/// `e^{αx} ν(dx)`; nested tilts of a density collapse onto the original base.
fn tilt_measure(nu: &LevyMeasure, alpha: f64) -> Result<LevyMeasure> {
    if alpha == 0.0 {
        return Ok(nu.clone());
    }
    Ok(match nu {
        LevyMeasure::Zero => LevyMeasure::Zero,
        LevyMeasure::FiniteActivity { intensity, law } => {
            LevyMeasure::finite(intensity * law.mgf(alpha), law.tilt(alpha))?
        }
        LevyMeasure::Density(d) => {
            let (base, total): (Arc<dyn LevyDensity>, f64) = match d.as_tilted() {
                Some(t) => (t.base().clone(), t.alpha() + alpha),
                None => (d.clone(), alpha),
            };
            if total == 0.0 {
                return Ok(LevyMeasure::Density(base));
            }
            let base_measure = LevyMeasure::Density(base.clone());
            let shift = tilt_shift(&base_measure, total, false)?;
            LevyMeasure::Density(Arc::new(TiltedDensity::new(base, total, shift)))
        }
    })
}

/// `(b + βc + ∫h(x)(e^{αx}-1)ν(dx), c, e^{αx}ν)`, in the triplet's own convention.
pub fn esscher_transform(triplet: &LevyTriplet, e: EsscherParams) -> Result<LevyTriplet> {
    let alpha = e.alpha_jump;
    if !alpha.is_finite() || !e.beta_cont.is_finite() {
        return Err(Error::InvalidParameter(
            "Esscher parameters must be finite".into(),
        ));
    }
    let strip = exp_strip(triplet.nu())?;
    if alpha != 0.0 && !strip.contains_interior(alpha) {
        return Err(Error::StripViolation(format!(
            "jump tilt {alpha} is not inside the exponential-moment strip {strip}"
        )));
    }
    let truncated = triplet.convention() == Truncation::TruncateUnit;
    let nu = tilt_measure(triplet.nu(), alpha)?;
    let shift = match (triplet.nu(), &nu, truncated) {
        // reuse the stored shifts so that drift and exponent cancel exactly
        (LevyMeasure::Density(before), LevyMeasure::Density(after), false) => {
            let s = |d: &Arc<dyn LevyDensity>| d.as_tilted().map_or(0.0, |t| t.shift());
            s(after) - s(before)
        }
        _ => tilt_shift(triplet.nu(), alpha, truncated)?,
    };
    let b = triplet.b() + e.beta_cont * triplet.c() + shift;
    LevyTriplet::new(b, triplet.c(), nu, triplet.convention())
}

/// The Esscher-tilted law as parameters of the same family, tilting by `θ` on both parts.
pub fn esscher_params(params: &ModelParams, theta: f64) -> Result<ModelParams> {
    params.validate()?;
    let s = params.moment_strip();
    if theta != 0.0 && !s.contains_interior(theta) {
        return Err(Error::StripViolation(format!(
            "tilt {theta} is not inside {s}"
        )));
    }
    if theta == 0.0 {
        return Ok(*params);
    }
    Ok(match *params {
        ModelParams::Bs { mu, sigma } => ModelParams::Bs {
            mu: mu + theta * sigma * sigma,
            sigma,
        },
        ModelParams::Merton {
            mu,
            sigma,
            lambda,
            mu_j,
            sigma_j,
        } => {
            let law = JumpLaw::Normal {
                mean: mu_j,
                sd: sigma_j,
            };
            ModelParams::Merton {
                mu: mu + theta * sigma * sigma,
                sigma,
                lambda: lambda * law.mgf(theta),
                mu_j: mu_j + theta * sigma_j * sigma_j,
                sigma_j,
            }
        }
        ModelParams::Kou {
            mu,
            sigma,
            lambda,
            p,
            theta1,
            theta2,
        } => {
            let law = JumpLaw::DoubleExponential { p, theta1, theta2 };
            let JumpLaw::DoubleExponential {
                p: pt,
                theta1: t1,
                theta2: t2,
            } = law.tilt(theta)
            else {
                unreachable!("tilt preserves the family")
            };
            ModelParams::Kou {
                mu: mu + theta * sigma * sigma,
                sigma,
                lambda: lambda * law.mgf(theta),
                p: pt,
                theta1: t1,
                theta2: t2,
            }
        }
        ModelParams::Vg {
            sigma,
            theta: th,
            kappa,
        } => {
            let (g, m) = exponents::vg_rates(sigma, th, kappa);
            let (g, m) = (g + theta, m - theta);
            ModelParams::Vg {
                sigma: (2.0 / (kappa * g * m)).sqrt(),
                theta: kappa.recip() * (1.0 / m - 1.0 / g),
                kappa,
            }
        }
        ModelParams::Nig {
            alpha,
            beta,
            delta,
            mu,
        } => ModelParams::Nig {
            alpha,
            beta: beta + theta,
            delta,
            mu,
        },
        ModelParams::Gh {
            alpha,
            beta,
            delta,
            mu,
            lambda,
        } => ModelParams::Gh {
            alpha,
            beta: beta + theta,
            delta,
            mu,
            lambda,
        },
        ModelParams::Cgmy { c, g, m, y } => ModelParams::Cgmy {
            c,
            g: g + theta,
            m: m - theta,
            y,
        },
        ModelParams::Meixner { alpha, beta, delta } => ModelParams::Meixner {
            alpha,
            beta: beta + alpha * theta,
            delta,
        },
    })
}

/// `θ*` with `κ(θ+1) - κ(θ) = r - δ`.
pub fn esscher_martingale_parameter(params: &ModelParams, env: &MarketEnv) -> Result<f64> {
    params.validate()?;
    let target = env.carry();
    let f =
        |th: f64| -> Result<f64> { Ok(params.cumulant(th + 1.0)? - params.cumulant(th)? - target) };
    let strip = params.moment_strip();
    let (mut lo, mut hi) = (strip.lo, strip.hi - 1.0);
    if !(hi > lo) {
        return Err(Error::NoRoot(format!(
            "strip {strip} is narrower than 1, so θ and θ+1 cannot both lie in it"
        )));
    }
    if let Ok(0.0) = f(0.0) {
        return Ok(0.0);
    }
    const FAR: f64 = 200.0;
    let pad = 1e-9 * (hi - lo).min(1.0);
    lo = if lo.is_finite() {
        lo + if strip.lo_closed { 0.0 } else { pad }
    } else {
        -FAR
    };
    hi = if hi.is_finite() {
        hi - if strip.hi_closed { 0.0 } else { pad }
    } else {
        FAR
    };
    let pts = chebyshev_points(lo, hi, 65);
    let mut grid = vec![lo];
    grid.extend(pts);
    grid.push(hi);
    grid.sort_by(f64::total_cmp);
    let mut prev: Option<(f64, f64)> = None;
    for &x in &grid {
        let Ok(v) = f(x) else { continue };
        if !v.is_finite() {
            continue;
        }
        if v == 0.0 {
            return Ok(x);
        }
        if let Some((px, pv)) = prev {
            if pv.signum() != v.signum() {
                let g = |th: f64| f(th).unwrap_or(f64::NAN);
                let mut root = brent(g, px, x, 1e-15, 200)?;
                // Newton polish; the derivative is Var under the tilted law and is positive
                for _ in 0..3 {
                    let r = g(root);
                    if r.abs() < 1e-14 {
                        break;
                    }
                    let h = 1e-6 * root.abs().max(1.0);
                    let d = (g(root + h) - g(root - h)) / (2.0 * h);
                    let next = root - r / d;
                    if d > 0.0 && next > px && next < x && g(next).abs() < r.abs() {
                        root = next;
                    } else {
                        break;
                    }
                }
                let res = g(root);
                if !(res.abs() < 1e-12) {
                    return Err(Error::NoRoot(format!(
                        "Esscher root residual {res} above 1e-12"
                    )));
                }
                return Ok(root);
            }
        }
        prev = Some((x, v));
    }
    Err(Error::NoRoot(format!(
        "κ(θ+1) - κ(θ) - (r - δ) has no sign change on [{lo}, {hi}]"
    )))
}

/// Closed-form measure-change cases.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum RiskCase {
    BlackScholes {
        b: f64,
        c: f64,
    },
    Poisson {
        b: f64,
        alpha: f64,
        lambda: f64,
    },
    /// Drift, Brownian part and Poisson jumps of size `α`, split by `ε ∈ (0,1)`.
    JumpDiffusion {
        b: f64,
        c: f64,
        alpha: f64,
        lambda: f64,
        eps: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarketPriceOfRisk {
    pub beta: Option<f64>,
    pub y: Option<f64>,
    /// Right-hand side of `0 = b - r + c(β + 1/2) + ((e^x - 1)Y - x) * ν`.
    pub residual: f64,
    /// Risk-neutral drift from the Girsanov map `b + cβ + x(Y-1) * ν`.
    pub drift: f64,
    /// Girsanov drift minus the martingale drift `r - c/2 - (e^x - 1 - x) * ν̄`.
    pub martingale_gap: f64,
}

pub fn market_price_of_risk(case: RiskCase, env: &MarketEnv) -> Result<MarketPriceOfRisk> {
    let r = env.carry();
    let (b, c, jump, beta, y) = match case {
        RiskCase::BlackScholes { b, c } => {
            if c == 0.0 {
                return Err(Error::DegenerateCase(
                    "Black-Scholes case needs c > 0".into(),
                ));
            }
            (b, c, None, Some((r - b) / c - 0.5), None)
        }
        RiskCase::Poisson { b, alpha, lambda } => {
            let den = alpha.exp_m1() * lambda;
            if den == 0.0 {
                return Err(Error::DegenerateCase(
                    "Poisson case needs (e^α - 1)λ ≠ 0".into(),
                ));
            }
            (
                b,
                0.0,
                Some((alpha, lambda)),
                None,
                Some((r - b + alpha * lambda) / den),
            )
        }
        RiskCase::JumpDiffusion {
            b,
            c,
            alpha,
            lambda,
            eps,
        } => {
            let den = alpha.exp_m1() * lambda;
            if c == 0.0 || den == 0.0 {
                return Err(Error::DegenerateCase(
                    "jump-diffusion case needs c > 0 and (e^α - 1)λ ≠ 0".into(),
                ));
            }
            if !(eps > 0.0 && eps < 1.0) {
                return Err(Error::InvalidParameter(format!(
                    "ε must lie in (0,1), got {eps}"
                )));
            }
            let beta = eps * (r - b) / c - 0.5;
            let y = ((1.0 - eps) * (r - b) + alpha * lambda) / den;
            (b, c, Some((alpha, lambda)), Some(beta), Some(y))
        }
    };
    let bt = beta.unwrap_or(0.0);
    let yv = y.unwrap_or(1.0);
    let (jump_eq, girsanov, compensator) = match jump {
        Some((a, l)) => (
            ((a.exp_m1()) * yv - a) * l,
            a * (yv - 1.0) * l,
            (a.exp_m1() - a) * yv * l,
        ),
        None => (0.0, 0.0, 0.0),
    };
    let residual = b - r + c * (bt + 0.5) + jump_eq;
    let drift = b + c * bt + girsanov;
    let martingale_gap = drift - (r - c / 2.0 - compensator);
    Ok(MarketPriceOfRisk {
        beta,
        y,
        residual,
        drift,
        martingale_gap,
    })
}

/// A model for `log(S_t/S_0)` whose law is `params` shifted by `ω t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PricingModel {
    pub params: ModelParams,
    pub omega: f64,
}

impl PricingModel {
    /// `ω = r - δ - κ(1)`, the mean-correcting martingale drift.
    pub fn risk_neutral(params: ModelParams, env: &MarketEnv) -> Result<Self> {
        params.validate()?;
        let s = params.moment_strip();
        if !s.contains(1.0) {
            return Err(Error::StripViolation(format!(
                "E[e^{{L_1}}] is infinite: 1 is outside the {} strip {s}",
                params.family().name()
            )));
        }
        Ok(Self {
            params,
            omega: env.carry() - params.cumulant(1.0)?,
        })
    }

    /// Uses the parameters as given, without martingale correction.
    pub fn physical(params: ModelParams) -> Result<Self> {
        params.validate()?;
        Ok(Self { params, omega: 0.0 })
    }

    pub fn cumulant(&self, p: f64) -> Result<f64> {
        Ok(self.params.cumulant(p)? + self.omega * p)
    }

    pub fn triplet(&self) -> Result<LevyTriplet> {
        let t = self.params.triplet()?;
        Ok(t.with_drift(t.b() + self.omega))
    }

    pub fn mean(&self) -> Result<f64> {
        Ok(self.params.moments()?.mean + self.omega)
    }
}

impl CharacteristicFunction for PricingModel {
    fn cf(&self, t: f64, u: Complex64) -> Result<Complex64> {
        Ok(self.params.cf(t, u)? * (Complex64::i() * u * self.omega * t).exp())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::levy::{levy_exponent, LevyMeasure};

    fn env(r: f64, div: f64) -> MarketEnv {
        MarketEnv::new(r, div, 100.0).unwrap()
    }

    #[test]
    fn drift_examples() {
        let e = env(0.05, 0.02);
        let b = risk_neutral_drift(0.04, &LevyMeasure::Zero, &e).unwrap();
        assert!((b - (0.05 - 0.02 - 0.02)).abs() < 1e-15);
        let nu = LevyMeasure::finite(1.3, JumpLaw::Point(0.2)).unwrap();
        let b = risk_neutral_drift(0.0, &nu, &env(0.05, 0.0)).unwrap();
        assert!((b - (0.05 - (0.2f64.exp() - 1.2) * 1.3)).abs() < 1e-14);
        let (lam, mj, sj) = (3.0, -0.05, 0.1);
        let nu = LevyMeasure::finite(lam, JumpLaw::Normal { mean: mj, sd: sj }).unwrap();
        let b = risk_neutral_drift(0.04, &nu, &e).unwrap();
        let expect = 0.03 - 0.02 - lam * ((mj + sj * sj / 2.0f64).exp() - 1.0 - mj);
        assert!((b - expect).abs() < 1e-14);
    }

    #[test]
    fn residuals() {
        let e = env(0.05, 0.0);
        let t = LevyTriplet::new(
            0.05 - 0.02 + 0.01,
            0.04,
            LevyMeasure::Zero,
            Truncation::CompensateAll,
        )
        .unwrap();
        assert!((martingale_residual(&t, &e).unwrap() - 0.01).abs() < 1e-15);
        let nig = ModelParams::Nig {
            alpha: 6.0,
            beta: -2.0,
            delta: 0.4,
            mu: 0.0,
        };
        let m = PricingModel::risk_neutral(nig, &e).unwrap();
        assert!(
            martingale_residual(&m.triplet().unwrap(), &e)
                .unwrap()
                .abs()
                < 1e-12
        );
    }

    #[test]
    fn bs_esscher_root() {
        let p = ModelParams::Bs {
            mu: 0.1,
            sigma: 0.2,
        };
        let e = env(0.05, 0.01);
        let th = esscher_martingale_parameter(&p, &e).unwrap();
        assert!((th - ((0.04 - 0.1) / 0.04 - 0.5)).abs() < 1e-12);
        let rn = ModelParams::Bs {
            mu: 0.04 - 0.02,
            sigma: 0.2,
        };
        assert!(esscher_martingale_parameter(&rn, &e).unwrap().abs() < 1e-12);
    }

    #[test]
    fn nig_esscher_composition() {
        let p = ModelParams::Nig {
            alpha: 6.0,
            beta: -2.0,
            delta: 0.4,
            mu: 0.03,
        };
        let e = env(0.05, 0.0);
        let th = esscher_martingale_parameter(&p, &e).unwrap();
        let t = esscher_transform(&p.triplet().unwrap(), EsscherParams::both(th)).unwrap();
        assert!(martingale_residual(&t, &e).unwrap().abs() < 1e-10);
        let q = esscher_params(&p, th).unwrap();
        assert!((q.cumulant(1.0).unwrap() - 0.05).abs() < 1e-10);
    }

    #[test]
    fn tilt_and_back() {
        let p = ModelParams::Cgmy {
            c: 1.0,
            g: 5.0,
            m: 8.0,
            y: 0.6,
        };
        let t = p.triplet().unwrap();
        let a = esscher_transform(&t, EsscherParams::both(1.5)).unwrap();
        let back = esscher_transform(&a, EsscherParams::both(-1.5)).unwrap();
        assert!(matches!(back.nu(), LevyMeasure::Density(d) if d.as_tilted().is_none()));
        for u in [-3.0, 0.4, 2.0] {
            let u = Complex64::new(u, 0.0);
            let d = levy_exponent(&back, u).unwrap() - levy_exponent(&t, u).unwrap();
            assert!(d.norm() < 1e-10, "{d}");
        }
    }

    #[test]
    fn risk_cases() {
        let e = env(0.05, 0.0);
        let bs = market_price_of_risk(RiskCase::BlackScholes { b: 0.05, c: 0.04 }, &e).unwrap();
        assert_eq!(bs.beta, Some(-0.5));
        let a: f64 = 0.3;
        let p = market_price_of_risk(
            RiskCase::Poisson {
                b: 0.05,
                alpha: a,
                lambda: 2.0,
            },
            &e,
        )
        .unwrap();
        assert!((p.y.unwrap() - a / a.exp_m1()).abs() < 1e-15);
        assert!(p.martingale_gap.abs() < 1e-12);
        for eps in [0.25, 0.5, 0.75] {
            let j = RiskCase::JumpDiffusion {
                b: 0.1,
                c: 0.04,
                alpha: -0.1,
                lambda: 1.5,
                eps,
            };
            let m = market_price_of_risk(j, &e).unwrap();
            assert!(m.residual.abs() < 1e-12 && m.martingale_gap.abs() < 1e-12);
        }
        assert!(matches!(
            market_price_of_risk(RiskCase::BlackScholes { b: 0.0, c: 0.0 }, &e),
            Err(Error::DegenerateCase(_))
        ));
    }
}
