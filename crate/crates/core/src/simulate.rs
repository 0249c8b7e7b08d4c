//! Seeded path simulation and Poisson random measure statistics.
//!
//! Path `k` draws from a ChaCha12 stream keyed by `(seed, k)`, so output does
//! not depend on how paths are scheduled across threads.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Gamma, InverseGaussian, Poisson, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::levy::{JumpLaw, LevyMeasure, Region};
use crate::measure_change::PricingModel;
use crate::models::ModelParams;
use crate::numerics::kahan_sum;
use crate::numerics::quad::QuadOptions;

/// Strictly increasing times starting at 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    times: Vec<f64>,
}

impl TimeGrid {
    pub fn new(times: Vec<f64>) -> Result<Self> {
        if times.len() < 2 {
            return Err(Error::InvalidGrid("a grid needs at least two times".into()));
        }
        if times[0] != 0.0 {
            return Err(Error::InvalidGrid(format!(
                "grid must start at 0, starts at {}",
                times[0]
            )));
        }
        if let Some(w) = times
            .windows(2)
            .find(|w| !(w[1] > w[0]) || !w[1].is_finite())
        {
            return Err(Error::InvalidGrid(format!(
                "grid is not strictly increasing at {} -> {}",
                w[0], w[1]
            )));
        }
        Ok(Self { times })
    }

    pub fn uniform(horizon: f64, steps: usize) -> Result<Self> {
        if steps == 0 || !(horizon > 0.0) || !horizon.is_finite() {
            return Err(Error::InvalidGrid(format!(
                "need steps >= 1 and T > 0, got {steps} steps and T = {horizon}"
            )));
        }
        let times = (0..=steps)
            .map(|i| {
                if i == steps {
                    horizon
                } else {
                    horizon * i as f64 / steps as f64
                }
            })
            .collect();
        Self::new(times)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn horizon(&self) -> f64 {
        *self.times.last().expect("grid is non-empty")
    }

    /// Number of steps.
    pub fn steps(&self) -> usize {
        self.times.len() - 1
    }
}

/// Simulated trajectories, one row per path, `paths[k][0] = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathBundle {
    pub grid: TimeGrid,
    pub paths: Vec<Vec<f64>>,
    pub seed: u64,
    pub model: String,
}

impl PathBundle {
    /// `t,path_0,...` with one row per grid time.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["t".to_string()];
        header.extend((0..self.paths.len()).map(|k| format!("path_{k}")));
        w.write_record(&header).map_err(io_err)?;
        for (i, t) in self.grid.times().iter().enumerate() {
            let mut row = vec![t.to_string()];
            row.extend(self.paths.iter().map(|p| p[i].to_string()));
            w.write_record(&row).map_err(io_err)?;
        }
        w.flush().map_err(|e| Error::Io(e.to_string()))
    }

    pub fn terminal(&self) -> Vec<f64> {
        self.paths
            .iter()
            .map(|p| *p.last().expect("path is non-empty"))
            .collect()
    }
}

fn io_err(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

/// RNG for path `k` under `seed`.
pub fn path_rng(seed: u64, k: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(k);
    rng
}

/// Drift, Brownian part and compound Poisson jumps: `L_t = bt + σW_t + Σ J_k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JumpDiffusion {
    pub b: f64,
    pub sigma: f64,
    pub lambda: f64,
    pub law: JumpLaw,
}

impl JumpDiffusion {
    pub fn new(b: f64, sigma: f64, lambda: f64, law: JumpLaw) -> Result<Self> {
        if !(sigma >= 0.0) || !(lambda >= 0.0) || !lambda.is_finite() || !b.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "jump diffusion needs finite b, sigma >= 0 and finite lambda >= 0, got b = {b}, sigma = {sigma}, lambda = {lambda}"
            )));
        }
        if lambda > 0.0 {
            law.validate()?;
        }
        Ok(Self {
            b,
            sigma,
            lambda,
            law,
        })
    }

    pub fn from_params(p: &ModelParams) -> Result<Self> {
        p.validate()?;
        match *p {
            ModelParams::Bs { mu, sigma } => Self::new(mu, sigma, 0.0, JumpLaw::Point(1.0)),
            ModelParams::Merton {
                mu,
                sigma,
                lambda,
                mu_j,
                sigma_j,
            } => Self::new(
                mu,
                sigma,
                lambda,
                JumpLaw::Normal {
                    mean: mu_j,
                    sd: sigma_j,
                },
            ),
            ModelParams::Kou {
                mu,
                sigma,
                lambda,
                p,
                theta1,
                theta2,
            } => Self::new(
                mu,
                sigma,
                lambda,
                JumpLaw::DoubleExponential { p, theta1, theta2 },
            ),
            _ => Err(Error::UnsupportedModel(format!(
                "{} is not a jump diffusion",
                p.family().name()
            ))),
        }
    }

    /// One path with its continuous part and jump list.
    pub fn sample<R: Rng + ?Sized>(&self, grid: &TimeGrid, rng: &mut R) -> FiniteActivityPath {
        let t = grid.times();
        let mut cont = Vec::with_capacity(t.len());
        cont.push(0.0);
        let mut w = 0.0;
        for s in t.windows(2) {
            let dt = s[1] - s[0];
            let g: f64 = StandardNormal.sample(rng);
            w += self.sigma * dt.sqrt() * g;
            cont.push(self.b * s[1] + w);
        }
        let horizon = grid.horizon();
        let n = if self.lambda > 0.0 {
            Poisson::new(self.lambda * horizon)
                .expect("positive finite intensity")
                .sample(rng) as usize
        } else {
            0
        };
        let mut times: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * horizon).collect();
        times.sort_by(f64::total_cmp);
        let jumps = times
            .into_iter()
            .map(|tau| (tau, self.law.sample(rng)))
            .collect();
        FiniteActivityPath {
            times: t.to_vec(),
            continuous: cont,
            jumps,
            c: self.sigma * self.sigma,
        }
    }
}

/// A trajectory split into its continuous part on the grid and its jumps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiniteActivityPath {
    pub times: Vec<f64>,
    /// `bt + √c W_t` at the grid times.
    pub continuous: Vec<f64>,
    /// `(time, size)` sorted by time.
    pub jumps: Vec<(f64, f64)>,
    pub c: f64,
}

impl FiniteActivityPath {
    /// `L` at the grid times.
    pub fn values(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.times.len());
        let mut j = 0;
        let mut acc = 0.0;
        for (i, &t) in self.times.iter().enumerate() {
            while j < self.jumps.len() && self.jumps[j].0 <= t {
                acc += self.jumps[j].1;
                j += 1;
            }
            out.push(self.continuous[i] + acc);
        }
        out
    }
}

/// `E(L)_t = exp(L_t - ct/2) Π_{s≤t} (1 + ΔL_s) e^{-ΔL_s}` at the grid times.
pub fn stochastic_exponential(
    path: &FiniteActivityPath,
    require_positive: bool,
) -> Result<Vec<f64>> {
    if require_positive {
        if let Some(&(time, size)) = path.jumps.iter().find(|j| j.1 <= -1.0) {
            return Err(Error::JumpBelowMinusOne { time, size });
        }
    }
    let mut out = Vec::with_capacity(path.times.len());
    let mut j = 0;
    let mut prod = 1.0;
    for (i, &t) in path.times.iter().enumerate() {
        while j < path.jumps.len() && path.jumps[j].0 <= t {
            prod *= 1.0 + path.jumps[j].1;
            j += 1;
        }
        // the e^{-ΔL} factors cancel the jump part of L
        out.push((path.continuous[i] - path.c * t / 2.0).exp() * prod);
    }
    Ok(out)
}

/// One path of `params` on the grid, starting at 0.
pub fn sample_path<R: Rng + ?Sized>(
    params: &ModelParams,
    grid: &TimeGrid,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let t = grid.times();
    match *params {
        ModelParams::Bs { .. } | ModelParams::Merton { .. } | ModelParams::Kou { .. } => {
            Ok(JumpDiffusion::from_params(params)?.sample(grid, rng).values())
        }
        ModelParams::Nig { alpha, beta, delta, mu } => {
            let gamma = (alpha * alpha - beta * beta).sqrt();
            let mut out = Vec::with_capacity(t.len());
            out.push(0.0);
            let mut x = 0.0;
            for s in t.windows(2) {
                let dt = s[1] - s[0];
                let dd = delta * dt;
                let ig = InverseGaussian::new(dd / gamma, dd * dd)
                    .map_err(|e| Error::InvalidParameter(format!("inverse Gaussian: {e}")))?;
                let i: f64 = ig.sample(rng);
                let g: f64 = StandardNormal.sample(rng);
                x += mu * dt + beta * i + i.sqrt() * g;
                out.push(x);
            }
            Ok(out)
        }
        ModelParams::Vg { sigma, theta, kappa } => {
            let mut out = Vec::with_capacity(t.len());
            out.push(0.0);
            let mut x = 0.0;
            for s in t.windows(2) {
                let dt = s[1] - s[0];
                let gd = Gamma::new(dt / kappa, kappa).map_err(|e| Error::InvalidParameter(format!("gamma: {e}")))?;
                let g: f64 = gd.sample(rng);
                let z: f64 = StandardNormal.sample(rng);
                x += theta * g + sigma * g.sqrt() * z;
                out.push(x);
            }
            Ok(out)
        }
        _ => Err(Error::UnsupportedModel(format!(
            "no exact increment sampler for {}; it is available for pricing by transform or PIDE only",
            params.family().name()
        ))),
    }
}

fn check_simulable(params: &ModelParams) -> Result<()> {
    params.validate()?;
    if params.simulable() {
        Ok(())
    } else {
        sample_path(params, &TimeGrid::uniform(1.0, 1)?, &mut path_rng(0, 0)).map(|_| ())
    }
}

/// `n_paths` paths of `params` on the grid.
pub fn simulate(
    params: &ModelParams,
    grid: &TimeGrid,
    n_paths: usize,
    seed: u64,
) -> Result<PathBundle> {
    simulate_shifted(params, 0.0, grid, n_paths, seed)
}

/// Paths of `log(S_t/S_0)` under a pricing model, including its drift correction.
pub fn simulate_model(
    model: &PricingModel,
    grid: &TimeGrid,
    n_paths: usize,
    seed: u64,
) -> Result<PathBundle> {
    simulate_shifted(&model.params, model.omega, grid, n_paths, seed)
}

fn simulate_shifted(
    params: &ModelParams,
    omega: f64,
    grid: &TimeGrid,
    n_paths: usize,
    seed: u64,
) -> Result<PathBundle> {
    check_simulable(params)?;
    let paths = (0..n_paths)
        .into_par_iter()
        .map(|k| {
            let mut rng = path_rng(seed, k as u64);
            let mut p = sample_path(params, grid, &mut rng)?;
            if omega != 0.0 {
                for (x, t) in p.iter_mut().zip(grid.times()) {
                    *x += omega * t;
                }
            }
            Ok(p)
        })
        .collect::<Result<Vec<_>>>()?;
    let model = serde_json::to_string(params).map_err(|e| Error::Io(e.to_string()))?;
    Ok(PathBundle {
        grid: grid.clone(),
        paths,
        seed,
        model,
    })
}

/// Jump-diffusion paths from explicit characteristics.
pub fn simulate_jump_diffusion(
    jd: &JumpDiffusion,
    grid: &TimeGrid,
    n_paths: usize,
    seed: u64,
) -> PathBundle {
    let paths = (0..n_paths)
        .into_par_iter()
        .map(|k| jd.sample(grid, &mut path_rng(seed, k as u64)).values())
        .collect();
    PathBundle {
        grid: grid.clone(),
        paths,
        seed,
        model: format!(
            "jump-diffusion(b={}, sigma={}, lambda={}, law={:?})",
            jd.b, jd.sigma, jd.lambda, jd.law
        ),
    }
}

/// Poisson counting paths, or `N_t - λt` when `compensated`.
pub fn simulate_poisson(
    lambda: f64,
    grid: &TimeGrid,
    n_paths: usize,
    seed: u64,
    compensated: bool,
) -> Result<PathBundle> {
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "Poisson intensity must be finite and >= 0, got {lambda}"
        )));
    }
    let t = grid.times();
    let paths = (0..n_paths)
        .into_par_iter()
        .map(|k| {
            let mut rng = path_rng(seed, k as u64);
            let mut n = 0.0;
            let mut out = Vec::with_capacity(t.len());
            out.push(0.0);
            for s in t.windows(2) {
                let m = lambda * (s[1] - s[0]);
                if m > 0.0 {
                    n += Poisson::new(m)
                        .expect("positive finite mean")
                        .sample(&mut rng);
                }
                out.push(if compensated { n - lambda * s[1] } else { n });
            }
            out
        })
        .collect();
    let kind = if compensated {
        "compensated-poisson"
    } else {
        "poisson"
    };
    Ok(PathBundle {
        grid: grid.clone(),
        paths,
        seed,
        model: format!("{kind}(lambda={lambda})"),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoissonIntegralStats {
    pub sample_mean: f64,
    pub sample_var: f64,
    pub analytic_mean: f64,
    pub analytic_var: f64,
    pub n_paths: usize,
}

impl PoissonIntegralStats {
    /// `(sample mean - analytic mean) / stderr`.
    pub fn mean_z(&self) -> f64 {
        let se = (self.sample_var / self.n_paths as f64).sqrt();
        if se == 0.0 {
            if self.sample_mean == self.analytic_mean {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            (self.sample_mean - self.analytic_mean) / se
        }
    }

    /// z-score of the sample variance, using the fourth-moment estimate `t∫f⁴dν` for its spread.
    pub fn var_z(&self, fourth: f64) -> f64 {
        // Var(s²) ≈ (μ₄ - σ⁴)/n with μ₄ = t∫f⁴dν + 3σ⁴ for a compound Poisson sum
        let mu4 = fourth + 3.0 * self.analytic_var * self.analytic_var;
        let se = ((mu4 - self.analytic_var * self.analytic_var) / self.n_paths as f64).sqrt();
        if se == 0.0 {
            0.0
        } else {
            (self.sample_var - self.analytic_var) / se
        }
    }
}

/// Statistics of `∫_0^t ∫_A f(x) μ(ds, dx)` for jumps of intensity `λ` with law `F`.
pub fn poisson_integral_stats<F>(
    lambda: f64,
    law: JumpLaw,
    f: F,
    region: &Region,
    t: f64,
    n_paths: usize,
    seed: u64,
) -> Result<PoissonIntegralStats>
where
    F: Fn(f64) -> f64 + Sync,
{
    if region.touches_origin() {
        return Err(Error::RegionTouchesOrigin(
            "the integration region must stay away from 0".into(),
        ));
    }
    if n_paths < 2 {
        return Err(Error::InvalidParameter("need at least two paths".into()));
    }
    let nu = LevyMeasure::finite(lambda, law)?;
    let opts = QuadOptions::abs(1e-13).with_rel(1e-12);
    let analytic_mean = t * nu.integrate(&f, region, opts)?;
    let analytic_var = t * nu.integrate(|x| f(x).powi(2), region, opts)?;
    let samples: Vec<f64> = (0..n_paths)
        .into_par_iter()
        .map(|k| {
            let mut rng = path_rng(seed, k as u64);
            let n = if lambda * t > 0.0 {
                Poisson::new(lambda * t)
                    .expect("positive mean")
                    .sample(&mut rng) as usize
            } else {
                0
            };
            kahan_sum(
                (0..n)
                    .map(|_| law.sample(&mut rng))
                    .filter(|&x| region.contains(x))
                    .map(&f),
            )
        })
        .collect();
    let (m, v) = mean_var(&samples);
    Ok(PoissonIntegralStats {
        sample_mean: m,
        sample_var: v,
        analytic_mean,
        analytic_var,
        n_paths,
    })
}

/// Sample mean and unbiased variance with compensated sums.
pub fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = kahan_sum(xs.iter().copied()) / n;
    let v = kahan_sum(xs.iter().map(|x| (x - m) * (x - m))) / (n - 1.0);
    (m, v)
}

/// z-score of the sample mean of `e^{uL_t - tκ(u)}` against 1.
pub fn exponential_martingale_check(
    params: &ModelParams,
    u: f64,
    t: f64,
    n_paths: usize,
    seed: u64,
) -> Result<f64> {
    let kappa = params.cumulant(u)?;
    check_simulable(params)?;
    if u == 0.0 || t == 0.0 {
        return Ok(0.0);
    }
    let grid = TimeGrid::uniform(t, 1)?;
    let samples = (0..n_paths)
        .into_par_iter()
        .map(|k| {
            let p = sample_path(params, &grid, &mut path_rng(seed, k as u64))?;
            Ok((u * p[1] - t * kappa).exp())
        })
        .collect::<Result<Vec<f64>>>()?;
    let (m, v) = mean_var(&samples);
    let se = (v / n_paths as f64).sqrt();
    Ok(if se == 0.0 { 0.0 } else { (m - 1.0) / se })
}
