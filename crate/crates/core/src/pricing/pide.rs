//! Finite differences for the pricing PIDE in `x = log(S/S₀)` and time to maturity `τ`.
//!
//! `∂_τ f = μ ∂_x f + (c_ε/2) ∂²_x f - r f + Σ_j w_j (f(x + z_j) - f(x))`, with
//! `μ = r - δ - c_ε/2 - Σ_j w_j (e^{z_j} - 1)`. The weights `w_j` are the ν-masses
//! of the grid cells around `z_j = jh` outside `|z| < ε`; jumps below `ε` are
//! replaced by the extra variance `∫_{|z|<ε} z² ν(dz)` in `c_ε`. Writing the
//! drift through the same weights prices the forward exactly.
//!
//! Local terms use Crank–Nicolson (after four implicit-Euler half steps), the
//! jump sum is explicit with second-order Adams–Bashforth extrapolation.

use serde::{Deserialize, Serialize};

use super::payoff::{PayoffKind, PayoffSpec};
use crate::error::{Error, Result};
use crate::levy::{JumpLaw, LevyMeasure, Region};
use crate::measure_change::{MarketEnv, PricingModel};
use crate::numerics::quad::QuadOptions;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PideGrid {
    pub x_min: f64,
    pub x_max: f64,
    pub n_x: usize,
    pub n_t: usize,
    /// Implicit weight of the local terms.
    pub theta: f64,
    /// Jumps smaller than this are replaced by diffusion.
    pub eps_jump: f64,
}

impl PideGrid {
    /// `±width` standard deviations of `L_T` around 0.
    pub fn around(
        model: &PricingModel,
        t: f64,
        width: f64,
        n_x: usize,
        n_t: usize,
    ) -> Result<Self> {
        let sd = (model.params.moments()?.variance * t).sqrt();
        let half = width * sd;
        Ok(Self {
            x_min: -half,
            x_max: half,
            n_x,
            n_t,
            theta: 0.5,
            eps_jump: 1e-2,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidGrid(m));
        if !(self.x_min < 0.0 && self.x_max > 0.0)
            || !self.x_min.is_finite()
            || !self.x_max.is_finite()
        {
            return bad(format!(
                "domain [{}, {}] must contain 0",
                self.x_min, self.x_max
            ));
        }
        if self.n_x < 3 || self.n_t < 1 {
            return bad(format!(
                "need n_x >= 3 and n_t >= 1, got {} and {}",
                self.n_x, self.n_t
            ));
        }
        if !(0.0..=1.0).contains(&self.theta) {
            return bad(format!("theta must lie in [0, 1], got {}", self.theta));
        }
        if !(self.eps_jump > 0.0) || self.eps_jump >= self.x_max.min(-self.x_min) {
            return bad(format!(
                "eps_jump {} must be positive and inside the domain",
                self.eps_jump
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PideSolution {
    pub x: Vec<f64>,
    /// Calendar times, from 0 to T.
    pub t: Vec<f64>,
    /// `surface[j][i] = f(x_i, t_j)`.
    pub surface: Vec<Vec<f64>>,
    pub price: f64,
    /// `|price(ε/2) - price(ε)|` for infinite-activity measures.
    pub eps_change: Option<f64>,
}

impl PideSolution {
    /// `(x, t, f)` rows.
    pub fn triples(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.t
            .iter()
            .zip(&self.surface)
            .flat_map(move |(&t, row)| self.x.iter().zip(row).map(move |(&x, &f)| (x, t, f)))
    }
}

/// `f ≈ A e^x + B` outside the domain.
#[derive(Debug, Clone, Copy)]
struct Asymptote {
    a: f64,
    b: f64,
}

impl Asymptote {
    fn at(&self, x: f64) -> f64 {
        if self.a == 0.0 {
            self.b
        } else {
            self.a * x.exp() + self.b
        }
    }
}

fn asymptotes(payoff: &PayoffSpec, env: &MarketEnv, tau: f64) -> (Asymptote, Asymptote) {
    let fwd = env.s0 * (-env.div * tau).exp();
    let df = (-env.r * tau).exp();
    let k = payoff.strike;
    let zero = Asymptote { a: 0.0, b: 0.0 };
    match payoff.kind {
        PayoffKind::Call => (zero, Asymptote { a: fwd, b: -k * df }),
        PayoffKind::Put => (Asymptote { a: -fwd, b: k * df }, zero),
        PayoffKind::DigitalCall => (zero, Asymptote { a: 0.0, b: df }),
        PayoffKind::DigitalPut => (Asymptote { a: 0.0, b: df }, zero),
    }
}

/// Discrete jump measure on the grid.
struct JumpStencil {
    /// `(offset j, weight)` with nonzero weight.
    weights: Vec<(isize, f64)>,
    total: f64,
    /// `Σ w_j (e^{z_j} - 1)` plus the tails.
    exp_compensator: f64,
    /// `(ν(z > z_max), ∫_{z>z_max} e^z ν)` and the same below `-z_max`.
    right: (f64, f64),
    left: (f64, f64),
    /// `∫_{|z|<ε} z² ν(dz)`
    small_var: f64,
}

const GL8: [(f64, f64); 8] = [
    (-0.960_289_856_497_536_2, 0.101_228_536_290_376_26),
    (-0.796_666_477_413_626_7, 0.222_381_034_453_374_47),
    (-0.525_532_409_916_329, 0.313_706_645_877_887_3),
    (-0.183_434_642_495_649_8, 0.362_683_783_378_362),
    (0.183_434_642_495_649_8, 0.362_683_783_378_362),
    (0.525_532_409_916_329, 0.313_706_645_877_887_3),
    (0.796_666_477_413_626_7, 0.222_381_034_453_374_47),
    (0.960_289_856_497_536_2, 0.101_228_536_290_376_26),
];

/// Pointwise Lévy density, `None` for atoms.
fn point_density(nu: &LevyMeasure, x: f64) -> Option<f64> {
    match nu {
        LevyMeasure::Zero => Some(0.0),
        LevyMeasure::FiniteActivity { intensity, law } => law.density(x).map(|d| intensity * d),
        LevyMeasure::Density(d) => Some(d.density(x)),
    }
}

/// `∫ φ z² ν` over `(a, b)` where `φ` is linear, `φ(a) = wa`, `φ(b) = wb`.
fn hat_piece(nu: &LevyMeasure, a: f64, b: f64, wa: f64, wb: f64) -> f64 {
    let (m, r) = (0.5 * (a + b), 0.5 * (b - a));
    let sum: f64 = GL8
        .iter()
        .map(|&(s, w)| {
            let x = m + r * s;
            let phi = wa + (wb - wa) * (s + 1.0) * 0.5;
            w * phi * x * x * point_density(nu, x).unwrap_or(0.0)
        })
        .sum();
    sum * r
}

/// Lattice weights spread `z² ν(dz)` over hat functions, so the lattice keeps the second moment of the
/// jumps in `ε ≤ |z| ≤ z_max`; the martingale drift absorbs the first-moment difference.
fn build_stencil(nu: &LevyMeasure, h: f64, eps: f64, reach: usize) -> Result<JumpStencil> {
    let zmax = reach as f64 * h;
    let mut w2 = vec![[0.0f64; 2]; reach + 1];
    match nu {
        LevyMeasure::FiniteActivity {
            intensity,
            law: JumpLaw::Point(p),
        } => {
            let side = usize::from(*p > 0.0);
            let a = p.abs() / h;
            if *p != 0.0 && a < reach as f64 {
                let j = a.floor() as usize;
                let frac = if j == 0 { 1.0 } else { a - j as f64 };
                w2[j][side] += intensity * p * p * (1.0 - frac);
                w2[j + 1][side] += intensity * p * p * frac;
            }
        }
        LevyMeasure::Zero => {}
        _ => {
            for j in 0..reach {
                let (lo, hi) = (j as f64 * h, (j + 1) as f64 * h);
                if hi <= eps {
                    continue;
                }
                let a = lo.max(eps);
                // nothing is left at the origin: the first cell goes to the first node
                let wa = if j == 0 { 1.0 } else { (a - lo) / h };
                let wb = 1.0;
                w2[j][0] += hat_piece(nu, -hi, -a, 0.0, 1.0 - wa);
                w2[j + 1][0] += hat_piece(nu, -hi, -a, wb, wa);
                w2[j][1] += hat_piece(nu, a, hi, 1.0 - wa, 0.0);
                w2[j + 1][1] += hat_piece(nu, a, hi, wa, wb);
            }
        }
    }
    let mut weights = Vec::new();
    let mut total = 0.0;
    let mut comp = 0.0;
    for (j, pair) in w2.iter().enumerate().skip(1) {
        for (side, &m2) in pair.iter().enumerate() {
            let k = if side == 1 { j as isize } else { -(j as isize) };
            let z = k as f64 * h;
            let wj = m2 / (z * z);
            if wj > 0.0 && wj.is_finite() {
                weights.push((k, wj));
                total += wj;
                comp += wj * z.exp_m1();
            }
        }
    }
    let opts = QuadOptions::abs(1e-14).with_rel(1e-10);
    let tail = |region: Region| -> Result<(f64, f64)> {
        let v: Vec<f64> = nu.integrate(|x| vec![1.0, x.exp()], &region, opts)?;
        Ok((v[0], v[1]))
    };
    let right = tail(Region::interval(zmax, f64::INFINITY))?;
    let left = tail(Region::interval(f64::NEG_INFINITY, -zmax))?;
    comp += (right.1 - right.0) + (left.1 - left.0);
    total += right.0 + left.0;
    let small_var = match nu {
        LevyMeasure::Density(_) => nu.small_moments(eps)?[0],
        _ => 0.0,
    };
    Ok(JumpStencil {
        weights,
        total,
        exp_compensator: comp,
        right,
        left,
        small_var,
    })
}

fn thomas(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &mut [f64]) {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = diag[0];
    c[0] = upper[0] / d;
    rhs[0] /= d;
    for i in 1..n {
        d = diag[i] - lower[i] * c[i - 1];
        c[i] = upper[i] / d;
        rhs[i] = (rhs[i] - lower[i] * rhs[i - 1]) / d;
    }
    for i in (0..n - 1).rev() {
        rhs[i] -= c[i] * rhs[i + 1];
    }
}

/// Central differences, except that a vanishing diffusion gets upwind damping.
fn grid_diffusion(d: f64, mu: f64, h: f64) -> f64 {
    if d * 1e6 <= mu.abs() * h {
        0.5 * mu.abs() * h
    } else {
        d
    }
}

struct Problem<'a> {
    x: Vec<f64>,
    h: f64,
    i0: usize,
    stencil: JumpStencil,
    mu: f64,
    diff: f64,
    env: &'a MarketEnv,
    payoff: &'a PayoffSpec,
}

impl Problem<'_> {
    /// `Σ_j w_j f̃(x_i + z_j)` including the tails.
    fn jump_sum(&self, f: &[f64], tau: f64) -> Vec<f64> {
        let n = f.len() as isize;
        let (left, right) = asymptotes(self.payoff, self.env, tau);
        let (x0, h) = (self.x[0], self.h);
        let s = &self.stencil;
        (0..n)
            .map(|i| {
                let mut acc = 0.0;
                for &(j, w) in &s.weights {
                    let k = i + j;
                    let v = if k < 0 {
                        left.at(x0 + k as f64 * h)
                    } else if k >= n {
                        right.at(x0 + k as f64 * h)
                    } else {
                        f[k as usize]
                    };
                    acc += w * v;
                }
                let xi = self.x[i as usize];
                acc + right.a * xi.exp() * s.right.1
                    + right.b * s.right.0
                    + left.a * xi.exp() * s.left.1
                    + left.b * s.left.0
            })
            .collect()
    }

    /// `(I - θk L) f_new = (I + (1-θ)k L) f + k J`.
    fn step(&self, f: &[f64], jump: &[f64], k: f64, theta: f64, tau_new: f64) -> Vec<f64> {
        let n = f.len();
        let h2 = self.h * self.h;
        let lo_c = self.diff / h2 - self.mu / (2.0 * self.h);
        let up_c = self.diff / h2 + self.mu / (2.0 * self.h);
        let di_c = -2.0 * self.diff / h2 - self.env.r - self.stencil.total;
        let mut lower = vec![0.0; n];
        let mut diag = vec![1.0; n];
        let mut upper = vec![0.0; n];
        let mut rhs = vec![0.0; n];
        for i in 1..n - 1 {
            let lf = lo_c * f[i - 1] + di_c * f[i] + up_c * f[i + 1];
            rhs[i] = f[i] + (1.0 - theta) * k * lf + k * jump[i];
            lower[i] = -theta * k * lo_c;
            diag[i] = 1.0 - theta * k * di_c;
            upper[i] = -theta * k * up_c;
        }
        let (left, right) = asymptotes(self.payoff, self.env, tau_new);
        rhs[0] = left.at(self.x[0]);
        rhs[n - 1] = right.at(self.x[n - 1]);
        thomas(&lower, &diag, &upper, &mut rhs);
        rhs
    }
}

fn solve_once(
    model: &PricingModel,
    env: &MarketEnv,
    t: f64,
    payoff: &PayoffSpec,
    grid: &PideGrid,
    eps: f64,
) -> Result<PideSolution> {
    let h = (grid.x_max - grid.x_min) / (grid.n_x - 1) as f64;
    // shift the grid so that x = 0 is a node
    let i0 = (-grid.x_min / h).round() as usize;
    let x: Vec<f64> = (0..grid.n_x).map(|i| (i as f64 - i0 as f64) * h).collect();
    let triplet = model.params.triplet()?;
    let nu = triplet.nu();
    let eps_eff = match nu {
        LevyMeasure::Density(_) => eps.max(0.5 * h),
        _ => 0.0,
    };
    let stencil = build_stencil(nu, h, eps_eff, 2 * (grid.n_x - 1))?;
    let k = t / grid.n_t as f64;
    if stencil.total * k > 1.0 {
        return Err(Error::CflViolation(format!(
            "explicit jump rate {:.4} times step {k:.4} exceeds 1; use more time steps or a larger eps_jump",
            stencil.total
        )));
    }
    let c_eff = triplet.c() + stencil.small_var;
    let resid = model.cumulant(1.0)? - env.carry();
    let mu = env.carry() + resid - c_eff / 2.0 - stencil.exp_compensator;
    let diff = grid_diffusion(c_eff / 2.0, mu, h);
    let p = Problem {
        x,
        h,
        i0,
        stencil,
        mu,
        diff,
        env,
        payoff,
    };

    let f0: Vec<f64> =
        p.x.iter()
            .map(|&xi| payoff.value(env.s0 * xi.exp()))
            .collect();
    let mut surface = vec![f0.clone()];
    let mut f = f0;
    let mut prev_jump: Option<Vec<f64>> = None;
    let startup = grid.n_t.min(2);
    for n in 0..grid.n_t {
        let tau = n as f64 * k;
        let jump = p.jump_sum(&f, tau);
        if n < startup {
            // two implicit-Euler half steps damp the payoff kink
            let half = 0.5 * k;
            let mid = p.step(&f, &jump, half, 1.0, tau + half);
            let jump_mid = p.jump_sum(&mid, tau + half);
            f = p.step(&mid, &jump_mid, half, 1.0, tau + k);
        } else {
            let prev = prev_jump.as_ref().expect("set after the first step");
            let ab2: Vec<f64> = jump
                .iter()
                .zip(prev)
                .map(|(a, b)| 1.5 * a - 0.5 * b)
                .collect();
            f = p.step(&f, &ab2, k, grid.theta, tau + k);
        }
        prev_jump = Some(jump);
        surface.push(f.clone());
    }
    // surface rows run in τ; store them in calendar time
    surface.reverse();
    let times = (0..=grid.n_t)
        .map(|j| t - (grid.n_t - j) as f64 * k)
        .map(|v| v.max(0.0))
        .collect();
    let price = surface[0][p.i0];
    Ok(PideSolution {
        x: p.x,
        t: times,
        surface,
        price,
        eps_change: None,
    })
}

/// Solves backward from the payoff at `T` and reads the price at `x = 0`, `t = 0`.
pub fn solve_pide(
    model: &PricingModel,
    env: &MarketEnv,
    t: f64,
    payoff: &PayoffSpec,
    grid: &PideGrid,
) -> Result<PideSolution> {
    env.validate()?;
    grid.validate()?;
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "maturity must be positive, got {t}"
        )));
    }
    let mut sol = solve_once(model, env, t, payoff, grid, grid.eps_jump)?;
    if matches!(model.params.triplet()?.nu(), LevyMeasure::Density(_)) {
        let half = solve_once(model, env, t, payoff, grid, 0.5 * grid.eps_jump)?;
        sol.eps_change = Some((half.price - sol.price).abs());
    }
    Ok(sol)
}
