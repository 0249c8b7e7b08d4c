//! Path and moment properties read off the Lévy measure.
//!
//! Analytic side information from the density is used when present. Otherwise
//! the log-density is fitted near the origin and over the last decade of the
//! tail range, and a verdict is only returned when the fitted exponent clears
//! the convergence threshold by a margin of 0.1.

use serde::{Deserialize, Serialize};

use super::measure::{LevyDensity, LevyMeasure, Region};
use super::strip::Strip;
use super::triplet::{LevyTriplet, Truncation};
use crate::error::{Error, Result};
use crate::numerics::quad::QuadOptions;

const MARGIN: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Finiteness {
    Finite,
    Infinite,
}

impl Finiteness {
    fn from_bool(finite: bool) -> Self {
        if finite {
            Finiteness::Finite
        } else {
            Finiteness::Infinite
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathReport {
    pub activity: Finiteness,
    pub variation: Finiteness,
    pub subordinator: bool,
    pub spectrally_negative: bool,
    pub spectrally_positive: bool,
    pub special_semimartingale: bool,
}

pub fn classify(t: &LevyTriplet) -> Result<PathReport> {
    let nu = t.nu();
    let (neg, pos) = nu.sides()?;
    let activity = small_moment_finite(nu, 0.0)?;
    let small_variation = small_moment_finite(nu, 1.0)?;
    let variation = t.c() == 0.0 && small_variation;
    let subordinator = if !neg && t.c() == 0.0 && small_variation {
        let small_mean = match nu {
            LevyMeasure::Zero => 0.0,
            LevyMeasure::FiniteActivity { intensity, law } => intensity * law.partial_mean(1.0),
            LevyMeasure::Density(_) => nu.integrate(
                |x| x,
                &Region::interval(0.0, 1.0),
                QuadOptions::abs(1e-12).with_rel(1e-12),
            )?,
        };
        let gamma = t.drift_in(Truncation::TruncateUnit)? - small_mean;
        gamma >= -1e-12
    } else {
        false
    };
    Ok(PathReport {
        activity: Finiteness::from_bool(activity),
        variation: Finiteness::from_bool(variation),
        subordinator,
        spectrally_negative: !pos,
        spectrally_positive: !neg,
        special_semimartingale: moment_finite(t, 1.0)?,
    })
}

/// Whether `∫_{|x|≥1} |x|^p ν(dx) < ∞`, i.e. `E|L_1|^p < ∞`.
pub fn moment_finite(t: &LevyTriplet, p: f64) -> Result<bool> {
    let d = match t.nu() {
        LevyMeasure::Zero | LevyMeasure::FiniteActivity { .. } => return Ok(true),
        LevyMeasure::Density(d) => d,
    };
    let (neg, pos) = t.nu().sides()?;
    let strip = d.exp_strip();
    let tails = d.tail_indices();
    for (side, present) in [(-1.0, neg), (1.0, pos)] {
        if !present {
            continue;
        }
        if let Some(s) = strip {
            if (side > 0.0 && s.hi > 0.0) || (side < 0.0 && s.lo < 0.0) {
                continue;
            }
        }
        if let Some((left, right)) = tails {
            if p >= if side > 0.0 { right } else { left } {
                return Ok(false);
            }
            continue;
        }
        match fit_tail(d.as_ref(), side) {
            None => continue,
            Some(fit) if fit.rate > MARGIN => continue,
            Some(fit) if fit.rate.abs() < 1e-8 => {
                let e = p + fit.power;
                if e < -1.0 - MARGIN {
                    continue;
                } else if e > -1.0 + MARGIN {
                    return Ok(false);
                }
                return Err(Error::Undecidable(format!(
                    "tail exponent {e:.3} of |x|^{p} ν within {MARGIN} of -1"
                )));
            }
            Some(fit) => {
                return Err(Error::Undecidable(format!(
                    "tail decay rate {:.3} too close to 0",
                    fit.rate
                )));
            }
        }
    }
    Ok(true)
}

/// Whether `∫_{|x|≥1} e^{px} ν(dx) < ∞`, i.e. `E[e^{pL_1}] < ∞`.
pub fn exp_moment_finite(t: &LevyTriplet, p: f64) -> Result<bool> {
    if p == 0.0 {
        return Ok(true);
    }
    match t.nu() {
        LevyMeasure::Zero => Ok(true),
        LevyMeasure::FiniteActivity { law, .. } => Ok(law.exp_strip().contains(p)),
        LevyMeasure::Density(d) => {
            if let Some(s) = d.exp_strip() {
                return Ok(s.contains(p));
            }
            let side = p.signum();
            let (neg, pos) = t.nu().sides()?;
            if (side > 0.0 && !pos) || (side < 0.0 && !neg) {
                return Ok(true);
            }
            let Some(fit) = fit_tail(d.as_ref(), side) else {
                return Ok(true);
            };
            let q = p.abs();
            if q < fit.rate - MARGIN {
                Ok(true)
            } else if q > fit.rate + MARGIN {
                Ok(false)
            } else {
                Err(Error::Undecidable(format!(
                    "exponent {p} within {MARGIN} of fitted tail rate {:.4}",
                    fit.rate
                )))
            }
        }
    }
}

/// Exponential-moment strip of ν.
pub fn exp_strip(nu: &LevyMeasure) -> Result<Strip> {
    match nu {
        LevyMeasure::Zero => Ok(Strip::real_line()),
        LevyMeasure::FiniteActivity { law, .. } => Ok(law.exp_strip()),
        LevyMeasure::Density(d) => {
            if let Some(s) = d.exp_strip() {
                return Ok(s);
            }
            let (neg, pos) = nu.sides()?;
            let rate = |side: f64, present: bool| -> f64 {
                if !present {
                    return f64::INFINITY;
                }
                fit_tail(d.as_ref(), side).map_or(f64::INFINITY, |f| f.rate.max(0.0))
            };
            Ok(Strip::open(-rate(-1.0, neg), rate(1.0, pos)))
        }
    }
}

/// Whether `∫_{0<|x|<1} |x|^k ν(dx) < ∞`.
pub(crate) fn small_moment_finite(nu: &LevyMeasure, k: f64) -> Result<bool> {
    let d = match nu {
        LevyMeasure::Zero | LevyMeasure::FiniteActivity { .. } => return Ok(true),
        LevyMeasure::Density(d) => d,
    };
    if let Some(y) = d.small_jump_index() {
        return Ok(y < k);
    }
    let (neg, pos) = nu.sides()?;
    for (side, present) in [(-1.0, neg), (1.0, pos)] {
        if !present {
            continue;
        }
        let Some(s) = fit_origin(d.as_ref(), side) else {
            continue;
        };
        let e = k + s;
        if e > -1.0 + MARGIN {
            continue;
        } else if e < -1.0 - MARGIN {
            return Ok(false);
        }
        return Err(Error::Undecidable(format!(
            "exponent {e:.3} of |x|^{k} ν near 0 within {MARGIN} of -1"
        )));
    }
    Ok(true)
}

struct TailFit {
    /// `ln ν(x) ≈ c - rate |x| + power ln|x|`
    rate: f64,
    power: f64,
}

/// Least-squares fit over the last decade of `[1, 1e4]` on which ν is representable.
fn fit_tail(d: &dyn LevyDensity, side: f64) -> Option<TailFit> {
    let finite = |x: f64| d.ln_density(side * x).is_finite();
    let r = [1e4, 1e3, 1e2, 1e1]
        .into_iter()
        .find(|&r| finite(r) && finite(r / 10.0))?;
    let xs: Vec<f64> = (0..=12)
        .map(|k| r / 10.0 * 10f64.powf(k as f64 / 12.0))
        .collect();
    let ys: Vec<f64> = xs.iter().map(|&x| d.ln_density(side * x)).collect();
    if ys.iter().any(|y| !y.is_finite()) {
        return None;
    }
    // normal equations for [1, x, ln x]
    let cols = |x: f64| [1.0, x, x.ln()];
    let mut a = nalgebra::Matrix3::<f64>::zeros();
    let mut rhs = nalgebra::Vector3::<f64>::zeros();
    for (&x, &y) in xs.iter().zip(&ys) {
        let v = nalgebra::Vector3::from(cols(x));
        a += v * v.transpose();
        rhs += v * y;
    }
    let sol = a.lu().solve(&rhs)?;
    Some(TailFit {
        rate: -sol[1],
        power: sol[2],
    })
}

/// Slope of `ln ν` against `ln|x|` on `[1e-7, 1e-6]`.
fn fit_origin(d: &dyn LevyDensity, side: f64) -> Option<f64> {
    let pts: Vec<(f64, f64)> = (0..=10)
        .map(|k| {
            let x = 1e-7 * 10f64.powf(k as f64 / 10.0);
            (x.ln(), d.ln_density(side * x))
        })
        .collect();
    if pts.iter().any(|(_, y)| !y.is_finite()) {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Some(sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::levy::measure::{FnDensity, JumpLaw};
    use std::sync::Arc;

    fn density_triplet(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> LevyTriplet {
        let nu = LevyMeasure::from_density(Arc::new(FnDensity::new("test", f))).unwrap();
        LevyTriplet::new(0.0, 0.0, nu, Truncation::TruncateUnit).unwrap()
    }

    #[test]
    fn power_tails_detected_numerically() {
        // stable-like tails |x|^{-1-a} with a = 1.5, tempered near 0 only by the power
        let t = density_triplet(|x: f64| x.abs().powf(-2.5));
        assert!(moment_finite(&t, 1.0).unwrap());
        assert!(!moment_finite(&t, 2.0).unwrap());
        assert!(matches!(moment_finite(&t, 1.5), Err(Error::Undecidable(_))));
        assert!(matches!(
            moment_finite(&t, 1.45),
            Err(Error::Undecidable(_))
        ));
        assert!(!exp_moment_finite(&t, 0.5).unwrap());
        let r = classify(&t).unwrap();
        assert_eq!(r.activity, Finiteness::Infinite);
        assert_eq!(r.variation, Finiteness::Infinite);
        assert!(r.special_semimartingale);
    }

    #[derive(Debug)]
    struct StableLike {
        a: f64,
    }

    impl LevyDensity for StableLike {
        fn density(&self, x: f64) -> f64 {
            x.abs().powf(-1.0 - self.a)
        }
        fn small_jump_index(&self) -> Option<f64> {
            Some(self.a)
        }
        fn tail_indices(&self) -> Option<(f64, f64)> {
            Some((self.a, self.a))
        }
    }

    #[test]
    fn stable_like_moments_stop_at_the_index() {
        let nu = LevyMeasure::from_density(Arc::new(StableLike { a: 1.5 })).unwrap();
        let t = LevyTriplet::new(0.0, 0.0, nu, Truncation::TruncateUnit).unwrap();
        assert!(moment_finite(&t, 1.49).unwrap());
        assert!(!moment_finite(&t, 1.5).unwrap());
        assert!(!moment_finite(&t, 3.0).unwrap());
    }

    #[test]
    fn exponential_tails_detected_numerically() {
        let t = density_triplet(|x: f64| {
            if x > 0.0 {
                (-3.0 * x).exp() / x.powf(1.5)
            } else {
                (-2.0 * x.abs()).exp() / x.abs().powf(1.5)
            }
        });
        assert!(moment_finite(&t, 7.0).unwrap());
        assert!(exp_moment_finite(&t, 2.8).unwrap());
        assert!(!exp_moment_finite(&t, 3.2).unwrap());
        assert!(exp_moment_finite(&t, -1.8).unwrap());
        assert!(!exp_moment_finite(&t, -2.2).unwrap());
        let s = exp_strip(t.nu()).unwrap();
        assert!((s.hi - 3.0).abs() < 1e-6 && (s.lo + 2.0).abs() < 1e-6);
        let r = classify(&t).unwrap();
        assert_eq!(
            (r.activity, r.variation),
            (Finiteness::Infinite, Finiteness::Finite)
        );
    }

    #[test]
    fn one_sided_finite_variation_subordinator() {
        // positive jumps only, index 0.5
        let nu = LevyMeasure::from_density(Arc::new(FnDensity::new("ig-like", |x: f64| {
            if x > 0.0 {
                (-x).exp() / x.powf(1.5)
            } else {
                0.0
            }
        })))
        .unwrap();
        let small: f64 = nu
            .integrate(|x| x, &Region::interval(0.0, 1.0), QuadOptions::abs(1e-12))
            .unwrap();
        let t = LevyTriplet::new(small + 0.1, 0.0, nu.clone(), Truncation::TruncateUnit).unwrap();
        let r = classify(&t).unwrap();
        assert!(r.subordinator && r.spectrally_positive && !r.spectrally_negative);
        assert_eq!(r.variation, Finiteness::Finite);
        let t = LevyTriplet::new(small - 0.1, 0.0, nu, Truncation::TruncateUnit).unwrap();
        assert!(!classify(&t).unwrap().subordinator);
    }

    #[test]
    fn poisson_is_a_subordinator() {
        let nu = LevyMeasure::finite(1.0, JumpLaw::Point(1.0)).unwrap();
        let t = LevyTriplet::new(0.0, 0.0, nu, Truncation::TruncateUnit).unwrap();
        let r = classify(&t).unwrap();
        assert!(r.subordinator && r.spectrally_positive);
        assert_eq!(r.activity, Finiteness::Finite);
    }

    #[test]
    fn brownian_motion_report() {
        let t = LevyTriplet::new(0.1, 0.04, LevyMeasure::Zero, Truncation::CompensateAll).unwrap();
        let r = classify(&t).unwrap();
        assert_eq!(r.variation, Finiteness::Infinite);
        assert!(!r.subordinator && r.special_semimartingale);
        assert!(moment_finite(&t, 50.0).unwrap() && exp_moment_finite(&t, 50.0).unwrap());
    }
}
