//! Monte Carlo prices from simulated terminal values or whole paths.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::payoff::PayoffSpec;
use crate::error::{Error, Result};
use crate::measure_change::{MarketEnv, PricingModel};
use crate::models::ModelParams;
use crate::simulate::{mean_var, path_rng, sample_path, TimeGrid};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McResult {
    pub price: f64,
    pub stderr: f64,
    pub ci95: (f64, f64),
    pub n_paths: usize,
    pub seed: u64,
}

/// Path functionals on the simulation grid. Averages and maxima use the grid dates only.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum PathPayoff {
    /// `(mean(S_{t_1}, ..., S_{t_n}) - K)⁺`
    AsianCall { strike: f64 },
    /// `(max(S_{t_0}, ..., S_{t_n}) - K)⁺`
    LookbackCall { strike: f64 },
    /// A European payoff on the last grid value.
    European(PayoffSpec),
}

impl PathPayoff {
    pub fn value(&self, s: &[f64]) -> f64 {
        match *self {
            PathPayoff::AsianCall { strike } => {
                let avg = s[1..].iter().sum::<f64>() / (s.len() - 1) as f64;
                (avg - strike).max(0.0)
            }
            PathPayoff::LookbackCall { strike } => {
                (s.iter().copied().fold(f64::NEG_INFINITY, f64::max) - strike).max(0.0)
            }
            PathPayoff::European(p) => p.value(*s.last().expect("path is non-empty")),
        }
    }
}

/// `log(S_t/S_0)` on the grid for path `k`.
fn log_path(
    model: &PricingModel,
    grid: &TimeGrid,
    seed: u64,
    k: usize,
    antithetic: bool,
) -> Result<Vec<f64>> {
    let mut rng = path_rng(seed, k as u64);
    let mut p = if antithetic {
        let ModelParams::Bs { mu, .. } = model.params else {
            return Err(Error::UnsupportedModel(
                "antithetic pairing is defined for Gaussian draws only (bs)".into(),
            ));
        };
        // path 2j+1 mirrors the Brownian draws of path 2j
        let mut rng = path_rng(seed, (k / 2) as u64);
        let x = sample_path(&model.params, grid, &mut rng)?;
        if k % 2 == 1 {
            x.iter()
                .zip(grid.times())
                .map(|(v, t)| 2.0 * mu * t - v)
                .collect()
        } else {
            x
        }
    } else {
        sample_path(&model.params, grid, &mut rng)?
    };
    if model.omega != 0.0 {
        for (x, t) in p.iter_mut().zip(grid.times()) {
            *x += model.omega * t;
        }
    }
    Ok(p)
}

fn summarize(
    values: &[f64],
    discount: f64,
    n_paths: usize,
    seed: u64,
    antithetic: bool,
) -> McResult {
    // under antithetic pairing the pair averages are the independent draws
    let draws: Vec<f64> = if antithetic {
        values
            .chunks(2)
            .map(|c| c.iter().sum::<f64>() / c.len() as f64)
            .collect()
    } else {
        values.to_vec()
    };
    let (m, v) = mean_var(&draws);
    let price = discount * m;
    let stderr = discount * (v / draws.len() as f64).sqrt();
    McResult {
        price,
        stderr,
        ci95: (price - 1.96 * stderr, price + 1.96 * stderr),
        n_paths,
        seed,
    }
}

fn run(
    model: &PricingModel,
    env: &MarketEnv,
    grid: &TimeGrid,
    payoff: &(dyn Fn(&[f64]) -> f64 + Sync),
    n_paths: usize,
    seed: u64,
    antithetic: bool,
) -> Result<McResult> {
    env.validate()?;
    if n_paths < 2 {
        return Err(Error::InvalidParameter(
            "Monte Carlo needs at least two paths".into(),
        ));
    }
    if !model.params.simulable() {
        return Err(Error::UnsupportedModel(format!(
            "{} cannot be simulated exactly; price it by transform or PIDE",
            model.params.family().name()
        )));
    }
    let values = (0..n_paths)
        .into_par_iter()
        .map(|k| {
            let x = log_path(model, grid, seed, k, antithetic)?;
            let s: Vec<f64> = x.iter().map(|v| env.s0 * v.exp()).collect();
            Ok(payoff(&s))
        })
        .collect::<Result<Vec<f64>>>()?;
    let discount = (-env.r * grid.horizon()).exp();
    Ok(summarize(&values, discount, n_paths, seed, antithetic))
}

/// `e^{-rT} (1/N) Σ g(S₀ e^{L_T})`.
pub fn mc_price(
    model: &PricingModel,
    env: &MarketEnv,
    t: f64,
    payoff: &(dyn Fn(f64) -> f64 + Sync),
    n_paths: usize,
    seed: u64,
    antithetic: bool,
) -> Result<McResult> {
    let grid = TimeGrid::uniform(t, 1)?;
    run(
        model,
        env,
        &grid,
        &|s: &[f64]| payoff(s[s.len() - 1]),
        n_paths,
        seed,
        antithetic,
    )
}

pub fn mc_price_path(
    model: &PricingModel,
    env: &MarketEnv,
    grid: &TimeGrid,
    payoff: &PathPayoff,
    n_paths: usize,
    seed: u64,
) -> Result<McResult> {
    run(
        model,
        env,
        grid,
        &|s: &[f64]| payoff.value(s),
        n_paths,
        seed,
        false,
    )
}
