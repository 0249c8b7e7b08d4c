//! Lévy triplets, the Lévy–Khintchine exponent and path classification.

pub mod classify;
pub mod measure;
pub mod strip;
pub mod triplet;

use num_complex::Complex64;

use crate::error::Result;

pub use classify::{classify, exp_moment_finite, moment_finite, Finiteness, PathReport};
pub use measure::{FnDensity, JumpLaw, LevyDensity, LevyMeasure, Region, TiltedDensity};
pub use strip::Strip;
pub use triplet::{
    characteristic_function, cumulant, levy_exponent, levy_exponent_by_quadrature, LevyTriplet,
    Truncation,
};

/// Anything with a characteristic function `u ↦ E[e^{iuL_t}]`.
pub trait CharacteristicFunction {
    fn cf(&self, t: f64, u: Complex64) -> Result<Complex64>;
}

impl CharacteristicFunction for LevyTriplet {
    fn cf(&self, t: f64, u: Complex64) -> Result<Complex64> {
        characteristic_function(self, t, u)
    }
}

/// `max_u |φ_{L_1}(u) - φ_{L_{1/n}}(u)^n|` over the grid.
pub fn infinite_divisibility_residual<M: CharacteristicFunction + ?Sized>(
    model: &M,
    n: u32,
    grid: &[f64],
) -> Result<f64> {
    let n = n.max(1);
    let mut worst = 0.0f64;
    for &u in grid {
        let u = Complex64::new(u, 0.0);
        let whole = model.cf(1.0, u)?;
        let piece = model.cf(1.0 / n as f64, u)?;
        let mut power = piece;
        for _ in 1..n {
            power *= piece;
        }
        worst = worst.max((whole - power).norm());
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn poisson_and_normal_are_infinitely_divisible() {
        let grid: Vec<f64> = (-10..=10).map(|k| k as f64 * 0.5).collect();
        let normal =
            LevyTriplet::new(0.3, 0.49, LevyMeasure::Zero, Truncation::CompensateAll).unwrap();
        assert!(infinite_divisibility_residual(&normal, 4, &grid).unwrap() < 1e-12);
        let poisson = LevyTriplet::new(
            0.0,
            0.0,
            LevyMeasure::finite(2.5, JumpLaw::Point(1.0)).unwrap(),
            Truncation::TruncateUnit,
        )
        .unwrap();
        assert!(infinite_divisibility_residual(&poisson, 7, &grid).unwrap() < 1e-12);
        assert_eq!(
            infinite_divisibility_residual(&poisson, 1, &grid).unwrap(),
            0.0
        );
    }
}
