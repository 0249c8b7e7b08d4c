//! Lévy densities of the pure-jump families.

use num_complex::Complex64;

use super::exponents;
use crate::error::Result;
use crate::levy::{LevyDensity, Strip};
use crate::numerics::quad::{integrate_breaks, QuadOptions};
use crate::numerics::special::{bessel_k_real_scaled, hankel_modulus_sq};

/// `e^{βx} δα/(π|x|) K₁(α|x|)`
#[derive(Debug, Clone, Copy)]
pub struct NigLevy {
    pub alpha: f64,
    pub beta: f64,
    pub delta: f64,
}

impl LevyDensity for NigLevy {
    fn density(&self, x: f64) -> f64 {
        self.ln_density(x).exp()
    }

    fn ln_density(&self, x: f64) -> f64 {
        let ax = self.alpha * x.abs();
        let k = bessel_k_real_scaled(1.0, ax).map_or(f64::NAN, f64::ln);
        self.beta * x + (self.delta * self.alpha / std::f64::consts::PI).ln() - x.abs().ln() + k
            - ax
    }

    fn compensated_exponent(&self, u: Complex64) -> Option<Result<Complex64>> {
        let gamma = (self.alpha.powi(2) - self.beta.powi(2)).sqrt();
        let mean = self.delta * self.beta / gamma;
        Some(Ok(
            exponents::nig(self.alpha, self.beta, self.delta, u) - Complex64::i() * u * mean
        ))
    }

    fn small_jump_index(&self) -> Option<f64> {
        Some(1.0)
    }

    fn exp_strip(&self) -> Option<Strip> {
        Some(Strip::closed(
            -self.alpha - self.beta,
            self.alpha - self.beta,
        ))
    }

    fn sides(&self) -> Option<(bool, bool)> {
        Some((true, true))
    }

    fn scale(&self) -> f64 {
        1.0 / self.alpha
    }

    fn name(&self) -> String {
        "NIG".into()
    }
}

/// `C e^{-Mx}/x^{1+Y}` on `x > 0`, `C e^{-G|x|}/|x|^{1+Y}` on `x < 0`.
#[derive(Debug, Clone, Copy)]
pub struct CgmyLevy {
    pub c: f64,
    pub g: f64,
    pub m: f64,
    pub y: f64,
}

impl LevyDensity for CgmyLevy {
    fn density(&self, x: f64) -> f64 {
        self.ln_density(x).exp()
    }

    fn ln_density(&self, x: f64) -> f64 {
        let rate = if x > 0.0 { self.m } else { self.g };
        self.c.ln() - rate * x.abs() - (1.0 + self.y) * x.abs().ln()
    }

    fn compensated_exponent(&self, u: Complex64) -> Option<Result<Complex64>> {
        let mean = exponents::cgmy_mean(self.c, self.g, self.m, self.y);
        Some(Ok(
            exponents::cgmy(self.c, self.g, self.m, self.y, u) - Complex64::i() * u * mean
        ))
    }

    fn small_jump_index(&self) -> Option<f64> {
        Some(self.y)
    }

    fn exp_strip(&self) -> Option<Strip> {
        // ∫_1^∞ x^{-1-Y} dx is finite iff Y > 0
        let closed = self.y > 0.0;
        Some(Strip {
            lo: -self.g,
            hi: self.m,
            lo_closed: closed,
            hi_closed: closed,
        })
    }

    fn sides(&self) -> Option<(bool, bool)> {
        Some((true, true))
    }

    fn scale(&self) -> f64 {
        1.0 / self.g.max(self.m)
    }

    fn name(&self) -> String {
        "CGMY".into()
    }
}

/// `δ e^{βx/α} / (x sinh(πx/α))`
#[derive(Debug, Clone, Copy)]
pub struct MeixnerLevy {
    pub alpha: f64,
    pub beta: f64,
    pub delta: f64,
}

impl LevyDensity for MeixnerLevy {
    fn density(&self, x: f64) -> f64 {
        self.ln_density(x).exp()
    }

    fn ln_density(&self, x: f64) -> f64 {
        let a = std::f64::consts::PI * x.abs() / self.alpha;
        // ln sinh a = a + ln(1 - e^{-2a}) - ln 2
        let ln_sinh = a + (-(-2.0 * a).exp()).ln_1p() - 2f64.ln();
        self.delta.ln() + self.beta * x / self.alpha - x.abs().ln() - ln_sinh
    }

    fn compensated_exponent(&self, u: Complex64) -> Option<Result<Complex64>> {
        let mean = self.alpha * self.delta * (self.beta / 2.0).tan();
        Some(Ok(
            exponents::meixner(self.alpha, self.beta, self.delta, u) - Complex64::i() * u * mean
        ))
    }

    fn small_jump_index(&self) -> Option<f64> {
        Some(1.0)
    }

    fn exp_strip(&self) -> Option<Strip> {
        let pi = std::f64::consts::PI;
        Some(Strip::open(
            (-pi - self.beta) / self.alpha,
            (pi - self.beta) / self.alpha,
        ))
    }

    fn sides(&self) -> Option<(bool, bool)> {
        Some((true, true))
    }

    fn scale(&self) -> f64 {
        self.alpha
    }

    fn name(&self) -> String {
        "Meixner".into()
    }
}

/// Generalised hyperbolic Lévy density, written with `z = √(2y)` as
/// `e^{βx}/|x| (∫_0^∞ w(z) e^{-√(z²+α²)|x|} dz + λ e^{-α|x|} 1_{λ≥0})`,
/// `w(z) = 2 / (π² z (J²_{|λ|}(δz) + Y²_{|λ|}(δz)))`.
///
/// Pointwise values come from quadrature at relative tolerance 1e-6 and are
/// meant for classification, not pricing.
#[derive(Debug, Clone, Copy)]
pub struct GhLevy {
    pub alpha: f64,
    pub beta: f64,
    pub delta: f64,
    pub lambda: f64,
}

impl GhLevy {
    fn weight(&self, z: f64) -> f64 {
        if z <= 0.0 {
            return 0.0;
        }
        match hankel_modulus_sq(self.lambda.abs(), self.delta * z) {
            Ok(h) => 2.0 / (std::f64::consts::PI.powi(2) * z * h),
            Err(_) => f64::NAN,
        }
    }

    fn z_breaks(&self) -> Vec<f64> {
        let s = 1.0 / self.delta;
        vec![
            0.0,
            0.01 * s,
            0.1 * s,
            s,
            10.0 * s,
            100.0 * s,
            f64::INFINITY,
        ]
    }

    /// `∫(e^{iux} - 1 - iux) ν(dx)` through the mixture: each `z` contributes a
    /// bilateral-gamma exponent with rates `√(z²+α²) ∓ β`.
    pub fn compensated_exponent_by_mixture(&self, u: Complex64) -> Result<Complex64> {
        let iu = Complex64::i() * u;
        let kernel = |z: f64| {
            let r = (z * z + self.alpha * self.alpha).sqrt();
            let m = r - self.beta;
            let g = r + self.beta;
            -(1.0 - iu / m).ln() - iu / m - (1.0 + iu / g).ln() + iu / g
        };
        let opts = QuadOptions::abs(1e-11).with_rel(1e-11);
        let mixed = integrate_breaks(|z| kernel(z) * self.weight(z), &self.z_breaks(), opts)?.value;
        let atom = if self.lambda >= 0.0 {
            self.lambda * kernel(0.0)
        } else {
            Complex64::new(0.0, 0.0)
        };
        Ok(mixed + atom)
    }
}

impl LevyDensity for GhLevy {
    fn density(&self, x: f64) -> f64 {
        self.ln_density(x).exp()
    }

    fn ln_density(&self, x: f64) -> f64 {
        let ax = x.abs();
        let a = self.alpha;
        // scaled by e^{α|x|} so the tail stays representable
        let f = |z: f64| {
            let r = (z * z + a * a).sqrt();
            self.weight(z) * (-(r - a) * ax).exp()
        };
        let opts = QuadOptions::abs(0.0).with_rel(1e-6);
        let mut breaks = self.z_breaks();
        if ax > 0.0 {
            breaks.extend([1.0 / ax, 10.0 / ax, 100.0 / ax]);
        }
        breaks.sort_by(f64::total_cmp);
        breaks.dedup();
        let mixed = match integrate_breaks(f, &breaks, opts) {
            Ok(r) => r.value,
            Err(_) => return f64::NAN,
        };
        let atom = if self.lambda >= 0.0 { self.lambda } else { 0.0 };
        self.beta * x - a * ax - ax.ln() + (mixed + atom).ln()
    }

    fn compensated_exponent(&self, u: Complex64) -> Option<Result<Complex64>> {
        let gamma = (self.alpha.powi(2) - self.beta.powi(2)).sqrt();
        let zeta = self.delta * gamma;
        let mean = match (
            bessel_k_real_scaled(self.lambda + 1.0, zeta),
            bessel_k_real_scaled(self.lambda, zeta),
        ) {
            (Ok(k1), Ok(k0)) => self.beta * self.delta / gamma * k1 / k0,
            (Err(e), _) | (_, Err(e)) => return Some(Err(e)),
        };
        Some(
            exponents::gh(self.alpha, self.beta, self.delta, self.lambda, u)
                .map(|v| v - Complex64::i() * u * mean),
        )
    }

    fn small_jump_index(&self) -> Option<f64> {
        Some(1.0)
    }

    fn exp_strip(&self) -> Option<Strip> {
        let closed = self.lambda < 0.0;
        Some(Strip {
            lo: -self.alpha - self.beta,
            hi: self.alpha - self.beta,
            lo_closed: closed,
            hi_closed: closed,
        })
    }

    fn sides(&self) -> Option<(bool, bool)> {
        Some((true, true))
    }

    fn scale(&self) -> f64 {
        1.0 / self.alpha
    }

    fn name(&self) -> String {
        "GH".into()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn gh_mixture_reduces_to_nig_measure() {
        let gh = GhLevy {
            alpha: 2.0,
            beta: 0.5,
            delta: 1.2,
            lambda: -0.5,
        };
        let nig = NigLevy {
            alpha: 2.0,
            beta: 0.5,
            delta: 1.2,
        };
        for x in [-3.0, -0.2, 0.01, 0.7, 4.0] {
            let (a, b) = (gh.density(x), nig.density(x));
            assert!((a / b - 1.0).abs() < 1e-6, "x = {x}: {a} vs {b}");
        }
        let u = Complex64::new(1.3, 0.0);
        let a = gh.compensated_exponent_by_mixture(u).unwrap();
        let b = nig.compensated_exponent(u).unwrap().unwrap();
        assert!((a - b).norm() < 1e-9, "{a} vs {b}");
    }

    #[test]
    fn meixner_density_near_origin() {
        // δα/(π x²) as x → 0
        let m = MeixnerLevy {
            alpha: 0.4,
            beta: 0.3,
            delta: 1.5,
        };
        let x = 1e-5;
        assert!((m.density(x) * x * x / (1.5 * 0.4 / PI) - 1.0).abs() < 1e-4);
    }
}
