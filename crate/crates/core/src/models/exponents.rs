//! Closed-form characteristic exponents of the pure-jump families, without location.

use num_complex::Complex64;

use crate::error::Result;
use crate::numerics::special::{bessel_k_real_scaled, ln_bessel_k};

fn i() -> Complex64 {
    Complex64::i()
}

/// `-δ(√(α² - (β+iu)²) - √(α² - β²))`
pub fn nig(alpha: f64, beta: f64, delta: f64, u: Complex64) -> Complex64 {
    let gamma = (alpha * alpha - beta * beta).sqrt();
    let w = alpha * alpha - (beta + i() * u).powi(2);
    -delta * (w.sqrt() - gamma)
}

/// Log of `((α²-β²)/(α²-(β+iu)²))^{λ/2} K_λ(δ√(α²-(β+iu)²)) / K_λ(δ√(α²-β²))`.
pub fn gh(alpha: f64, beta: f64, delta: f64, lambda: f64, u: Complex64) -> Result<Complex64> {
    let g2 = alpha * alpha - beta * beta;
    let zeta = delta * g2.sqrt();
    let ln_k0 = bessel_k_real_scaled(lambda, zeta)?.ln() - zeta;
    let w = alpha * alpha - (beta + i() * u).powi(2);
    if w.norm() == 0.0 && lambda < 0.0 {
        // boundary of the strip: K_ν(z) ~ Γ(ν) 2^{ν-1} z^{-ν}
        let nu = -lambda;
        let v = libm::lgamma(nu) + (nu - 1.0) * 2f64.ln() - nu * zeta.ln() - ln_k0;
        return Ok(Complex64::new(v, 0.0));
    }
    let z = delta * w.sqrt();
    Ok(0.5 * lambda * (g2.ln() - w.ln()) + ln_bessel_k(lambda, z)? - ln_k0)
}

/// `C Γ(-Y)[(M-iu)^Y - M^Y + (G+iu)^Y - G^Y]`, with the `Y = 0` and `Y = 1` limits.
pub fn cgmy(c: f64, g: f64, m: f64, y: f64, u: Complex64) -> Complex64 {
    let iu = i() * u;
    if y.abs() < 1e-9 {
        -c * ((1.0 - iu / m).ln() + (1.0 + iu / g).ln())
    } else if (y - 1.0).abs() < 1e-9 {
        c * ((m - iu) * (1.0 - iu / m).ln() + (g + iu) * (1.0 + iu / g).ln() + iu * (g / m).ln())
    } else {
        let mi = Complex64::new(m, 0.0) - iu;
        let gi = Complex64::new(g, 0.0) + iu;
        c * libm::tgamma(-y) * (mi.powf(y) - m.powf(y) + gi.powf(y) - g.powf(y))
    }
}

/// `E[L_1]` for the exponent above.
pub fn cgmy_mean(c: f64, g: f64, m: f64, y: f64) -> f64 {
    if (y - 1.0).abs() < 1e-9 {
        c * (g / m).ln()
    } else {
        c * libm::tgamma(1.0 - y) * (m.powf(y - 1.0) - g.powf(y - 1.0))
    }
}

/// `2δ[ln cos(β/2) - ln cosh((αu - iβ)/2)]`
pub fn meixner(alpha: f64, beta: f64, delta: f64, u: Complex64) -> Complex64 {
    let z = (alpha * u - i() * beta) / 2.0;
    2.0 * delta * ((beta / 2.0).cos().ln() - ln_cosh(z))
}

fn ln_cosh(z: Complex64) -> Complex64 {
    let ln2 = 2f64.ln();
    if z.re >= 0.0 {
        z + (1.0 + (-2.0 * z).exp()).ln() - ln2
    } else {
        -z + (1.0 + (2.0 * z).exp()).ln() - ln2
    }
}

/// `-(1/κ) ln(1 - iuθκ + σ²u²κ/2)`, the time-changed Brownian motion form.
pub fn vg(sigma: f64, theta: f64, kappa: f64, u: Complex64) -> Complex64 {
    let (g, m) = vg_rates(sigma, theta, kappa);
    // factorised so that the principal branches stay continuous off the real axis
    let iu = i() * u;
    -((1.0 - iu / m).ln() + (1.0 + iu / g).ln()) / kappa
}

/// `(G, M)` of the bilateral-gamma form of VG:
/// `1/M = √(θ²κ²/4 + σ²κ/2) + θκ/2`, `1/G = √(θ²κ²/4 + σ²κ/2) - θκ/2`.
pub fn vg_rates(sigma: f64, theta: f64, kappa: f64) -> (f64, f64) {
    let s = (theta * theta * kappa * kappa / 4.0 + sigma * sigma * kappa / 2.0).sqrt();
    let inv_m = s + theta * kappa / 2.0;
    let inv_g = s - theta * kappa / 2.0;
    (1.0 / inv_g, 1.0 / inv_m)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn gh_at_minus_half_is_nig() {
        for u in [-3.0, -0.4, 0.0, 1.1, 6.0] {
            let a = gh(2.0, -0.7, 1.3, -0.5, c(u)).unwrap();
            let b = nig(2.0, -0.7, 1.3, c(u));
            assert!((a - b).norm() < 1e-12, "u = {u}: {a} vs {b}");
        }
    }

    #[test]
    fn cgmy_limits_are_continuous() {
        for u in [0.3, 2.0, 7.0] {
            for y0 in [0.0, 1.0] {
                let a = cgmy(1.3, 4.0, 9.0, y0, c(u));
                let b = cgmy(1.3, 4.0, 9.0, y0 + 1e-6, c(u));
                assert!(
                    (a - b).norm() < 1e-4 * a.norm().max(1.0),
                    "Y = {y0}, u = {u}"
                );
            }
        }
        let m0 = cgmy_mean(1.3, 4.0, 9.0, 1.0);
        assert!((m0 - cgmy_mean(1.3, 4.0, 9.0, 1.0 + 1e-6)).abs() < 1e-5);
    }

    #[test]
    fn vg_factorisation_matches_record_form() {
        let (s, th, k) = (0.2, -0.14, 0.3);
        for u in [0.5, 1.0, 5.0, -3.0] {
            let direct = -(1.0 - c(u) * i() * th * k + s * s * u * u * k / 2.0).ln() / k;
            assert!((vg(s, th, k, c(u)) - direct).norm() < 1e-14);
        }
    }

    #[test]
    fn meixner_exponent_is_stable_for_large_u() {
        let v = meixner(0.3, -0.5, 1.2, c(4000.0));
        assert!(v.re.is_finite() && v.re < -1000.0);
    }
}
