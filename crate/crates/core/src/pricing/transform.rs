//! Pricing by inverting the bilateral Laplace transform of the payoff against the cf.
//!
//! With `ζ = -log S₀` and damping `R`,
//! `V = e^{-rT}/π ∫_0^∞ Re(e^{ζ(R+iu)} 𝔏(R+iu) φ_{L_T}(iR - u)) du`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::payoff::{PayoffKind, PayoffSpec};
use crate::error::{Error, Result};
use crate::levy::{CharacteristicFunction, Strip};
use crate::measure_change::{MarketEnv, PricingModel};
use crate::models::ModelParams;
use crate::numerics::quad::{integrate, QuadOptions, QuadValue};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum QuadratureRule {
    AdaptiveGaussKronrod,
    TruncatedTrapezoid,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub rule: QuadratureRule,
    pub abs_tol: f64,
    /// Largest truncation point of the inversion integral.
    pub u_max: f64,
    pub damping: Option<f64>,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            rule: QuadratureRule::AdaptiveGaussKronrod,
            abs_tol: 1e-10,
            u_max: 2000.0,
            damping: None,
        }
    }
}

impl QuadratureSpec {
    pub fn with_damping(mut self, r: f64) -> Self {
        self.damping = Some(r);
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0) || !(self.u_max > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "quadrature needs abs_tol > 0 and u_max > 0, got {} and {}",
                self.abs_tol, self.u_max
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransformPrice {
    pub price: f64,
    pub damping: f64,
    /// Set when the raw value left the no-arbitrage interval by more than the tolerance.
    pub warning: Option<String>,
}

/// Admissible open interval for `R`: the payoff strip intersected with `-strip`.
fn damping_interval(strip: &Strip, kind: PayoffKind) -> (f64, f64) {
    let p = kind.damping_strip();
    (p.lo.max(-strip.hi), p.hi.min(-strip.lo))
}

/// A damping `R` in the payoff strip with `-R` inside the moment strip, 5% of the width away from both ends.
pub fn select_damping(params: &ModelParams, t: f64, payoff: &PayoffSpec) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "maturity must be positive, got {t}"
        )));
    }
    let strip = params.moment_strip();
    let (lo, hi) = damping_interval(&strip, payoff.kind);
    if !(hi > lo) {
        return Err(Error::EmptyIntersection(format!(
            "no damping for a {} under {}: payoff strip {} and reflected moment strip ({}, {}) do not overlap",
            payoff.kind.name(),
            params.family().name(),
            payoff.damping_strip(),
            -strip.hi,
            -strip.lo
        )));
    }
    let d = payoff.kind.default_damping();
    let width = hi - lo;
    // an unbounded interval always contains the default
    if width.is_infinite() {
        return Ok(d);
    }
    let m = 0.05 * width;
    if d >= lo + m && d <= hi - m {
        Ok(d)
    } else {
        Ok(0.5 * (lo + hi))
    }
}

fn check_inputs(
    model: &PricingModel,
    env: &MarketEnv,
    t: f64,
    payoff: &PayoffSpec,
    quad: &QuadratureSpec,
) -> Result<f64> {
    env.validate()?;
    quad.validate()?;
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "maturity must be positive, got {t}"
        )));
    }
    if matches!(
        payoff.kind,
        PayoffKind::DigitalCall | PayoffKind::DigitalPut
    ) {
        let no_density = match model.params {
            ModelParams::Merton { sigma, .. } | ModelParams::Kou { sigma, .. } => sigma == 0.0,
            _ => false,
        };
        if no_density {
            return Err(Error::DegenerateCase(
                "digital payoffs need a continuous law; σ = 0 leaves an atom at the drift".into(),
            ));
        }
    }
    let r = match quad.damping {
        Some(r) => {
            if !(payoff.damping_strip().contains(r) && model.params.moment_strip().contains(-r)) {
                return Err(Error::EmptyIntersection(format!(
                    "damping {r} is not admissible for this payoff and model"
                )));
            }
            r
        }
        None => select_damping(&model.params, t, payoff)?,
    };
    Ok(r)
}

/// Starting truncation point from the spread of `L_T`.
fn initial_cutoff(model: &PricingModel, t: f64) -> f64 {
    let sd = model
        .params
        .moments()
        .map(|m| (m.variance * t).sqrt())
        .unwrap_or(0.2);
    (10.0 / sd.max(0.02)).clamp(5.0, 500.0)
}

/// `∫_0^∞ f` by Gauss–Kronrod on `[0, U]`, doubling `U` until a new panel adds less than `tol/10`.
fn integrate_doubling<T, F>(f: F, u0: f64, u_max: f64, tol: f64) -> Result<(T, bool)>
where
    T: QuadValue,
    F: Fn(f64) -> T,
{
    let opts = QuadOptions::abs(tol).with_rel(0.0);
    let mut u = u0.min(u_max);
    let mut total: T = integrate(&f, 0.0, u, opts)?.value;
    loop {
        if u >= u_max {
            return Ok((total, false));
        }
        let next = (2.0 * u).min(u_max);
        let piece: T = integrate(&f, u, next, opts)?.value;
        let size = (0..piece.dim())
            .map(|i| piece.component(i).abs())
            .fold(0.0, f64::max);
        total.axpy(1.0, &piece);
        u = next;
        if size < tol / 10.0 {
            return Ok((total, true));
        }
    }
}

fn integrate_trapezoid<T, F>(f: F, u0: f64, u_max: f64, tol: f64) -> Result<(T, bool)>
where
    T: QuadValue,
    F: Fn(f64) -> T,
{
    let norm = |v: &T| {
        (0..v.dim())
            .map(|i| v.component(i).abs())
            .fold(0.0, f64::max)
    };
    let mut cut = u0.min(u_max);
    while cut < u_max && norm(&f(cut)) > tol * 1e-3 {
        cut = (2.0 * cut).min(u_max);
    }
    let n = 20_000usize;
    let h = cut / n as f64;
    let first = f(0.0);
    let mut total = first.zeros_like();
    total.axpy(0.5 * h, &first);
    for i in 1..n {
        total.axpy(h, &f(i as f64 * h));
    }
    total.axpy(0.5 * h, &f(cut));
    Ok((total, norm(&f(cut)) <= tol * 1e-3))
}

fn clip(raw: f64, payoff: &PayoffSpec, env: &MarketEnv, t: f64, tol: f64) -> (f64, Option<String>) {
    let (lo, hi) = payoff.price_bounds(env.s0, env.r, env.div, t);
    let p = raw.clamp(lo, hi);
    let warning = ((p - raw).abs() > tol).then(|| {
        format!("QuadratureWarning: raw value {raw} clipped into the no-arbitrage interval [{lo}, {hi}]")
    });
    (p, warning)
}

pub fn transform_price(
    model: &PricingModel,
    env: &MarketEnv,
    t: f64,
    payoff: &PayoffSpec,
    quad: &QuadratureSpec,
) -> Result<TransformPrice> {
    let r = check_inputs(model, env, t, payoff, quad)?;
    let zeta = -env.s0.ln();
    let scale = (-env.r * t).exp() / std::f64::consts::PI;
    let integrand = |u: f64| -> f64 {
        let z = Complex64::new(r, u);
        let phi = model.cf(t, Complex64::new(-u, r));
        match (payoff.shifted_laplace(z, zeta), phi) {
            (Ok(l), Ok(p)) => (l * p).re,
            _ => f64::NAN,
        }
    };
    let tol = quad.abs_tol / scale;
    let u0 = initial_cutoff(model, t);
    let (value, converged) = match quad.rule {
        QuadratureRule::AdaptiveGaussKronrod => integrate_doubling(integrand, u0, quad.u_max, tol)?,
        QuadratureRule::TruncatedTrapezoid => integrate_trapezoid(integrand, u0, quad.u_max, tol)?,
    };
    if !value.is_finite() {
        return Err(Error::IntegrationFailure(
            "inversion integrand is not finite".into(),
        ));
    }
    let (price, mut warning) = clip(scale * value, payoff, env, t, quad.abs_tol);
    if !converged {
        let note = format!(
            "QuadratureWarning: integrand not negligible at the truncation point {}",
            quad.u_max
        );
        warning = Some(warning.map_or(note.clone(), |w| format!("{w}; {note}")));
    }
    Ok(TransformPrice {
        price,
        damping: r,
        warning,
    })
}

/// Prices on a maturity × strike grid; cf values are shared across strikes at each maturity.
pub fn price_smile(
    model: &PricingModel,
    env: &MarketEnv,
    maturities: &[f64],
    strikes: &[f64],
    kind: PayoffKind,
    quad: &QuadratureSpec,
) -> Vec<Vec<Result<f64>>> {
    maturities
        .par_iter()
        .map(|&t| match smile_row(model, env, t, strikes, kind, quad) {
            Ok(row) => row,
            Err(e) => strikes.iter().map(|_| Err(e.clone())).collect(),
        })
        .collect()
}

fn smile_row(
    model: &PricingModel,
    env: &MarketEnv,
    t: f64,
    strikes: &[f64],
    kind: PayoffKind,
    quad: &QuadratureSpec,
) -> Result<Vec<Result<f64>>> {
    let payoffs = strikes
        .iter()
        .map(|&k| PayoffSpec::new(kind, k))
        .collect::<Result<Vec<_>>>()?;
    if payoffs.is_empty() {
        return Ok(Vec::new());
    }
    let r = check_inputs(model, env, t, &payoffs[0], quad)?;
    let zeta = -env.s0.ln();
    let scale = (-env.r * t).exp() / std::f64::consts::PI;
    let integrand = |u: f64| -> Vec<f64> {
        let z = Complex64::new(r, u);
        let phi = model.cf(t, Complex64::new(-u, r));
        payoffs
            .iter()
            .map(|p| match (p.shifted_laplace(z, zeta), phi.as_ref()) {
                (Ok(l), Ok(ph)) => (l * ph).re,
                _ => f64::NAN,
            })
            .collect()
    };
    let tol = quad.abs_tol / scale;
    let u0 = initial_cutoff(model, t);
    let (values, _) = match quad.rule {
        QuadratureRule::AdaptiveGaussKronrod => integrate_doubling(integrand, u0, quad.u_max, tol)?,
        QuadratureRule::TruncatedTrapezoid => integrate_trapezoid(integrand, u0, quad.u_max, tol)?,
    };
    Ok(values
        .iter()
        .zip(&payoffs)
        .map(|(v, p)| {
            if v.is_finite() {
                Ok(clip(scale * v, p, env, t, quad.abs_tol).0)
            } else {
                Err(Error::IntegrationFailure(
                    "inversion integrand is not finite".into(),
                ))
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bs() -> PricingModel {
        let env = MarketEnv::new(0.05, 0.0, 100.0).unwrap();
        PricingModel::risk_neutral(
            ModelParams::Bs {
                mu: 0.0,
                sigma: 0.2,
            },
            &env,
        )
        .unwrap()
    }

    #[test]
    fn black_scholes_reference() {
        let env = MarketEnv::new(0.05, 0.0, 100.0).unwrap();
        let p = transform_price(
            &bs(),
            &env,
            1.0,
            &PayoffSpec::call(100.0).unwrap(),
            &QuadratureSpec::default(),
        )
        .unwrap();
        assert!(
            (p.price - 10.450_583_572_185_565).abs() < 1e-8,
            "{}",
            p.price
        );
        assert_eq!(p.damping, -1.25);
        assert!(p.warning.is_none());
    }

    #[test]
    fn damping_choices() {
        let kou = ModelParams::Kou {
            mu: 0.0,
            sigma: 0.1,
            lambda: 1.0,
            p: 0.5,
            theta1: 1.5,
            theta2: 3.0,
        };
        let r = select_damping(&kou, 1.0, &PayoffSpec::call(1.0).unwrap()).unwrap();
        assert!(r > -1.5 && r < -1.0);
        assert!(r >= -1.5 + 0.025 && r <= -1.0 - 0.025);
        let cgmy = ModelParams::Cgmy {
            c: 1.0,
            g: 5.0,
            m: 0.9,
            y: 0.5,
        };
        assert!(matches!(
            select_damping(&cgmy, 1.0, &PayoffSpec::call(1.0).unwrap()),
            Err(Error::EmptyIntersection(_))
        ));
        let b = ModelParams::Bs {
            mu: 0.0,
            sigma: 0.2,
        };
        assert_eq!(
            select_damping(&b, 1.0, &PayoffSpec::call(1.0).unwrap()).unwrap(),
            -1.25
        );
    }

    #[test]
    fn smile_cell_matches_single_price() {
        let env = MarketEnv::new(0.05, 0.0, 100.0).unwrap();
        let q = QuadratureSpec::default();
        let m = bs();
        let s = price_smile(&m, &env, &[0.5], &[95.0], PayoffKind::Call, &q);
        let p = transform_price(&m, &env, 0.5, &PayoffSpec::call(95.0).unwrap(), &q).unwrap();
        assert_eq!(*s[0][0].as_ref().unwrap(), p.price);
    }
}
