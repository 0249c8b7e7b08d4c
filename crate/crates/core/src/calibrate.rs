//! Implied volatilities, smile calibration and return-series maximum likelihood.

use std::collections::BTreeMap;
use std::path::Path;
use std::f64::consts::PI;

use chrono::NaiveDate;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measure_change::{MarketEnv, PricingModel};
use crate::models::{Family, ModelParams};
use crate::numerics::norm_cdf;
use crate::numerics::optimize::{nelder_mead, Bounds, NelderMeadOptions};
use crate::pricing::{price_smile, PayoffKind, QuadratureSpec};

fn check_kind(kind: PayoffKind) -> Result<()> {
    match kind {
        PayoffKind::Call | PayoffKind::Put => Ok(()),
        _ => Err(Error::InvalidParameter(format!(
            "implied volatility is defined for calls and puts, not {}",
            kind.name()
        ))),
    }
}

/// Black–Scholes price with continuous dividend yield.
pub fn bs_price(env: &MarketEnv, t: f64, k: f64, sigma: f64, kind: PayoffKind) -> Result<f64> {
    env.validate()?;
    if !(t > 0.0 && k > 0.0 && sigma >= 0.0) || !sigma.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "need T > 0, K > 0, sigma >= 0; got {t}, {k}, {sigma}"
        )));
    }
    let fwd = env.s0 * (-env.div * t).exp();
    let df = (-env.r * t).exp();
    let sd = sigma * t.sqrt();
    let (n1, n2) = if sd == 0.0 {
        let itm = fwd > k * df;
        let v = if itm { 1.0 } else { 0.0 };
        (v, v)
    } else {
        let d1 = ((fwd / (k * df)).ln() + 0.5 * sd * sd) / sd;
        (norm_cdf(d1), norm_cdf(d1 - sd))
    };
    Ok(match kind {
        PayoffKind::Call => fwd * n1 - k * df * n2,
        PayoffKind::Put => k * df * (1.0 - n2) - fwd * (1.0 - n1),
        PayoffKind::DigitalCall => df * n2,
        PayoffKind::DigitalPut => df * (1.0 - n2),
    })
}

fn bs_vega(env: &MarketEnv, t: f64, k: f64, sigma: f64) -> f64 {
    let fwd = env.s0 * (-env.div * t).exp();
    let sd = sigma * t.sqrt();
    let d1 = ((fwd / (k * (-env.r * t).exp())).ln() + 0.5 * sd * sd) / sd;
    fwd * crate::numerics::norm_pdf(d1) * t.sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImpliedVol {
    pub sigma: f64,
    /// The price sat on the lower no-arbitrage bound.
    pub at_lower_bound: bool,
}

/// Safeguarded Newton on vega with a bisection fallback.
pub fn implied_vol(
    env: &MarketEnv,
    t: f64,
    k: f64,
    price: f64,
    kind: PayoffKind,
) -> Result<ImpliedVol> {
    check_kind(kind)?;
    let fwd = env.s0 * (-env.div * t).exp();
    let kdf = k * (-env.r * t).exp();
    let (lower, upper) = match kind {
        PayoffKind::Call => ((fwd - kdf).max(0.0), fwd),
        _ => ((kdf - fwd).max(0.0), kdf),
    };
    let tiny = 1e-14 * upper;
    if !price.is_finite() || price < lower - tiny || price >= upper {
        return Err(Error::ArbitrageViolation(format!(
            "price {price} outside ({lower}, {upper}) for {} K={k} T={t}",
            kind.name()
        )));
    }
    if price <= lower + tiny {
        return Ok(ImpliedVol {
            sigma: 0.0,
            at_lower_bound: true,
        });
    }
    let f = |s: f64| bs_price(env, t, k, s, kind).map(|p| p - price);
    let (mut lo, mut hi) = (0.0, 1.0);
    while f(hi)? < 0.0 {
        lo = hi;
        hi *= 2.0;
        if hi > 1e4 {
            return Err(Error::NonConvergence(format!(
                "implied vol above {hi} for price {price}"
            )));
        }
    }
    let mut s = (2.0 * (fwd / kdf).ln().abs() / t)
        .sqrt()
        .clamp(0.05, 1.0)
        .clamp(lo, hi);
    let mut best = (f64::INFINITY, s);
    for _ in 0..200 {
        let res = f(s)?;
        if res.abs() < best.0 {
            best = (res.abs(), s);
        }
        if res == 0.0 {
            break;
        }
        if res > 0.0 {
            hi = s;
        } else {
            lo = s;
        }
        let vega = bs_vega(env, t, k, s);
        let newton = s - res / vega;
        let next = if vega > 1e-300 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if (next - s).abs() <= 1e-16 * s.max(1e-300) || hi - lo <= 1e-16 * hi {
            s = next;
            let r = f(s)?.abs();
            if r < best.0 {
                best = (r, s);
            }
            break;
        }
        s = next;
    }
    if best.0 >= 1e-10 {
        return Err(Error::NonConvergence(format!(
            "implied vol residual {} for price {price}",
            best.0
        )));
    }
    Ok(ImpliedVol {
        sigma: best.1,
        at_lower_bound: false,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VolQuote {
    pub maturity_years: f64,
    pub strike: f64,
    pub implied_vol: f64,
    pub weight: f64,
}

impl VolQuote {
    pub fn new(maturity_years: f64, strike: f64, implied_vol: f64) -> Result<Self> {
        let q = Self {
            maturity_years,
            strike,
            implied_vol,
            weight: 1.0,
        };
        q.validate()?;
        Ok(q)
    }

    pub fn validate(&self) -> Result<()> {
        let fin = [
            self.maturity_years,
            self.strike,
            self.implied_vol,
            self.weight,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !fin {
            return Err(Error::InvalidParameter("non-finite quote field".into()));
        }
        if self.maturity_years <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "maturity must be positive, got {}",
                self.maturity_years
            )));
        }
        if self.strike <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "strike must be positive, got {}",
                self.strike
            )));
        }
        if self.implied_vol <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "implied vol must be positive, got {}",
                self.implied_vol
            )));
        }
        if self.weight < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "weight must be non-negative, got {}",
                self.weight
            )));
        }
        Ok(())
    }
}

/// Out-of-the-money side: puts below the forward, calls above.
fn quote_kind(env: &MarketEnv, t: f64, k: f64) -> PayoffKind {
    if k < env.s0 * ((env.r - env.div) * t).exp() {
        PayoffKind::Put
    } else {
        PayoffKind::Call
    }
}

/// Model implied vols for each quote, in input order.
pub fn model_vols(
    model: &PricingModel,
    env: &MarketEnv,
    quotes: &[VolQuote],
    quad: &QuadratureSpec,
) -> Vec<Result<f64>> {
    let mut groups: BTreeMap<(u64, bool), Vec<usize>> = BTreeMap::new();
    for (i, q) in quotes.iter().enumerate() {
        let call = quote_kind(env, q.maturity_years, q.strike) == PayoffKind::Call;
        groups
            .entry((q.maturity_years.to_bits(), call))
            .or_default()
            .push(i);
    }
    let groups: Vec<_> = groups.into_iter().collect();
    let priced: Vec<Vec<(usize, Result<f64>)>> = groups
        .par_iter()
        .map(|((tb, call), idx)| {
            let t = f64::from_bits(*tb);
            let kind = if *call {
                PayoffKind::Call
            } else {
                PayoffKind::Put
            };
            let strikes: Vec<f64> = idx.iter().map(|&i| quotes[i].strike).collect();
            let row = price_smile(model, env, &[t], &strikes, kind, quad)
                .pop()
                .unwrap_or_default();
            idx.iter()
                .zip(row)
                .map(|(&i, p)| {
                    let v = p
                        .and_then(|p| implied_vol(env, t, quotes[i].strike, p, kind))
                        .map(|iv| iv.sigma);
                    (i, v)
                })
                .collect()
        })
        .collect();
    let mut out: Vec<Result<f64>> = quotes
        .iter()
        .map(|_| Err(Error::DegenerateCase("unpriced".into())))
        .collect();
    for (i, v) in priced.into_iter().flatten() {
        out[i] = v;
    }
    out
}

/// Quotes generated from a model's transform prices.
pub fn synthetic_quotes(
    model: &PricingModel,
    env: &MarketEnv,
    maturities: &[f64],
    strikes: &[f64],
) -> Result<Vec<VolQuote>> {
    let mut quotes = Vec::new();
    for &t in maturities {
        for &k in strikes {
            quotes.push(VolQuote {
                maturity_years: t,
                strike: k,
                implied_vol: 1.0,
                weight: 1.0,
            });
        }
    }
    let vols = model_vols(model, env, &quotes, &QuadratureSpec::default());
    for (q, v) in quotes.iter_mut().zip(vols) {
        q.implied_vol = v?;
    }
    Ok(quotes)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuoteResidual {
    pub maturity_years: f64,
    pub strike: f64,
    pub market_vol: f64,
    pub model_vol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationResult {
    pub params: ModelParams,
    pub vol_rmse: f64,
    /// Objective evaluations over all runs.
    pub iterations: usize,
    pub restarts_used: usize,
    pub residuals: Vec<QuoteResidual>,
}

/// Free coordinates: every parameter except the location, which the martingale drift overrides.
fn free_indices(family: Family) -> Vec<usize> {
    let n = ModelParams::param_names(family).len();
    let loc = ModelParams::location_index(family);
    (0..n).filter(|i| Some(*i) != loc).collect()
}

fn assemble(family: Family, template: &[f64], free: &[usize], x: &[f64]) -> Result<ModelParams> {
    let mut v = template.to_vec();
    for (&i, &xi) in free.iter().zip(x) {
        v[i] = xi;
    }
    ModelParams::from_vec(family, &v)
}

/// Box on the free coordinates used when the caller passes none.
pub fn default_bounds(family: Family) -> Bounds {
    let (lower, upper): (Vec<f64>, Vec<f64>) = match family {
        Family::Bs => (vec![1e-4], vec![5.0]),
        Family::Merton => (vec![1e-4, 0.0, -2.0, 1e-4], vec![5.0, 50.0, 2.0, 3.0]),
        Family::Kou => (
            vec![1e-4, 0.0, 0.0, 1.0 + 1e-6, 1e-3],
            vec![5.0, 50.0, 1.0, 200.0, 200.0],
        ),
        Family::Vg => (vec![1e-4, -2.0, 1e-4], vec![5.0, 2.0, 10.0]),
        Family::Nig => (vec![1e-3, -100.0, 1e-4], vec![200.0, 100.0, 20.0]),
        Family::Gh => (
            vec![1e-3, -100.0, 1e-4, -10.0],
            vec![200.0, 100.0, 20.0, 10.0],
        ),
        Family::Cgmy => (
            vec![1e-4, 1e-3, 1.0 + 1e-6, -5.0],
            vec![100.0, 200.0, 200.0, 1.99],
        ),
        Family::Meixner => (vec![1e-3, 0.01 - PI, 1e-4], vec![50.0, PI - 0.01, 50.0]),
    };
    Bounds { lower, upper }
}

const PENALTY: f64 = 1e6;

/// Distance of a parameter set from the risk-neutralizable region.
fn infeasibility(p: &ModelParams) -> f64 {
    let s = p.moment_strip();
    let gap = (1.0 - s.hi).max(0.0) + s.lo.max(0.0);
    if gap > 0.0 {
        gap
    } else {
        1.0
    }
}

fn weighted_rmse(quotes: &[VolQuote], vols: &[f64]) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for (q, v) in quotes.iter().zip(vols) {
        num += q.weight * (v - q.implied_vol).powi(2);
        den += q.weight;
    }
    if den > 0.0 {
        (num / den).sqrt()
    } else {
        0.0
    }
}

/// Least squares in implied-vol space with restarted, box-projected Nelder–Mead.
pub fn calibrate_smile(
    family: Family,
    quotes: &[VolQuote],
    env: &MarketEnv,
    init: &ModelParams,
    bounds: Option<&Bounds>,
) -> Result<CalibrationResult> {
    env.validate()?;
    if init.family() != family {
        return Err(Error::ParameterMismatch(format!(
            "init is {} but family is {}",
            init.family().name(),
            family.name()
        )));
    }
    for q in quotes {
        q.validate()?;
    }
    let free = free_indices(family);
    if quotes.len() < free.len() {
        return Err(Error::DegenerateData(format!(
            "{} quotes for {} free parameters",
            quotes.len(),
            free.len()
        )));
    }
    let template = init.to_vec();
    let x0: Vec<f64> = free.iter().map(|&i| template[i]).collect();
    let bounds = bounds.cloned().unwrap_or_else(|| default_bounds(family));
    if bounds.lower.len() != free.len() || bounds.upper.len() != free.len() {
        return Err(Error::InvalidParameter(format!(
            "bounds need {} entries",
            free.len()
        )));
    }
    if !bounds.contains(&x0) {
        return Err(Error::InvalidParameter(format!(
            "initial point {x0:?} outside bounds"
        )));
    }
    let quad = QuadratureSpec::default();
    let objective = |x: &[f64]| -> f64 {
        let params = match assemble(family, &template, &free, x) {
            Ok(p) => p,
            Err(_) => return PENALTY + 1.0,
        };
        let model = match PricingModel::risk_neutral(params, env) {
            Ok(m) => m,
            Err(_) => return PENALTY + infeasibility(&params),
        };
        let vols = model_vols(&model, env, quotes, &quad);
        let mut sum = 0.0;
        for (q, v) in quotes.iter().zip(vols) {
            match v {
                Ok(v) => sum += q.weight * (v - q.implied_vol).powi(2),
                Err(_) => return PENALTY + 1.0,
            }
        }
        sum
    };

    let opts = NelderMeadOptions::default();
    let mut best = nelder_mead(objective, &x0, &bounds, &opts);
    let mut evaluations = best.evaluations;
    let mut converged = best.converged;
    let mut restarts = 0;
    let mut rng = ChaCha12Rng::seed_from_u64(0x5eed);
    while restarts < 3 && best.f > 1e-20 {
        let mut start: Vec<f64> = best
            .x
            .iter()
            .map(|v| v * (1.0 + 0.1 * rng.random_range(-1.0..1.0)))
            .collect();
        bounds.project(&mut start);
        let run = nelder_mead(objective, &start, &bounds, &opts);
        evaluations += run.evaluations;
        converged |= run.converged;
        restarts += 1;
        let improved = run.f < best.f * (1.0 - 1e-8);
        if run.f < best.f {
            best = run;
        }
        if !improved {
            break;
        }
    }
    if best.f >= PENALTY {
        return Err(Error::NonConvergence(
            "no feasible parameter set found".into(),
        ));
    }
    if !converged {
        return Err(Error::NonConvergence(format!(
            "no run converged within {} evaluations",
            opts.max_evals
        )));
    }
    let params = assemble(family, &template, &free, &best.x)?;
    let model = PricingModel::risk_neutral(params, env)?;
    let vols = model_vols(&model, env, quotes, &quad)
        .into_iter()
        .collect::<Result<Vec<f64>>>()?;
    let residuals = quotes
        .iter()
        .zip(&vols)
        .map(|(q, &v)| QuoteResidual {
            maturity_years: q.maturity_years,
            strike: q.strike,
            market_vol: q.implied_vol,
            model_vol: v,
        })
        .collect();
    Ok(CalibrationResult {
        params,
        vol_rmse: weighted_rmse(quotes, &vols),
        iterations: evaluations,
        restarts_used: restarts,
        residuals,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReturnSeries {
    pub dates: Vec<NaiveDate>,
    pub returns: Vec<f64>,
    /// Years per observation.
    pub dt: f64,
}

impl ReturnSeries {
    pub fn new(returns: Vec<f64>, dt: f64) -> Self {
        Self {
            dates: Vec::new(),
            returns,
            dt,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MleFit {
    /// NIG and BS parameters are per year; GH parameters describe one observation interval.
    pub params: ModelParams,
    pub loglik: f64,
    pub stderr: Vec<f64>,
    /// Sorted `(empirical, model)` quantile pairs.
    pub qq: Vec<(f64, f64)>,
    pub evaluations: usize,
}

fn sample_moments(x: &[f64]) -> (f64, f64, f64, f64) {
    let n = x.len() as f64;
    let m = x.iter().sum::<f64>() / n;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for v in x {
        let d = v - m;
        m2 += d * d;
        m3 += d * d * d;
        m4 += d * d * d * d;
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    (m, m2, m3 / m2.powf(1.5), m4 / (m2 * m2) - 3.0)
}

/// NIG `(α, β, δ, μ)` for one interval from mean, variance, skewness and excess kurtosis.
fn nig_moment_match(m: f64, v: f64, skew: f64, exkurt: f64) -> [f64; 4] {
    let mut inv_zeta = exkurt / 3.0 - 4.0 * skew * skew / 9.0;
    if !(inv_zeta > 0.0) {
        inv_zeta = 0.1;
    }
    let zeta = 1.0 / inv_zeta;
    let rho = (skew * skew * zeta / 9.0).sqrt().min(0.9) * skew.signum();
    let alpha = (zeta / v).sqrt() / (1.0 - rho * rho);
    let beta = rho * alpha;
    let gamma = alpha * (1.0 - rho * rho).sqrt();
    let delta = zeta / gamma;
    [alpha, beta, delta, m - delta * beta / gamma]
}

fn ln_lik(params: &ModelParams, t: f64, x: &[f64]) -> f64 {
    let terms: Vec<f64> = x
        .par_iter()
        .map(|&xi| params.ln_density(t, xi).unwrap_or(f64::NEG_INFINITY))
        .collect();
    crate::numerics::kahan_sum(terms)
}

/// Unconstrained coordinates `(ln α, atanh(β/α), ln δ, μ[, λ])`.
fn to_free(v: &[f64]) -> Vec<f64> {
    let mut z = vec![v[0].ln(), (v[1] / v[0]).atanh(), v[2].ln(), v[3]];
    z.extend_from_slice(&v[4..]);
    z
}

fn from_free(z: &[f64]) -> Vec<f64> {
    let a = z[0].exp();
    let mut v = vec![a, a * z[1].tanh(), z[2].exp(), z[3]];
    v.extend_from_slice(&z[4..]);
    v
}

/// Central-difference Hessian of `f` at `x`.
fn hessian(f: &dyn Fn(&[f64]) -> f64, x: &[f64]) -> DMatrix<f64> {
    let n = x.len();
    let h: Vec<f64> = x.iter().map(|v| 1e-4 * v.abs().max(1e-4)).collect();
    let at = |di: &[(usize, f64)]| {
        let mut p = x.to_vec();
        for &(i, d) in di {
            p[i] += d;
        }
        f(&p)
    };
    let f0 = f(x);
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        m[(i, i)] = (at(&[(i, h[i])]) - 2.0 * f0 + at(&[(i, -h[i])])) / (h[i] * h[i]);
        for j in 0..i {
            let v = (at(&[(i, h[i]), (j, h[j])])
                - at(&[(i, h[i]), (j, -h[j])])
                - at(&[(i, -h[i]), (j, h[j])])
                + at(&[(i, -h[i]), (j, -h[j])]))
                / (4.0 * h[i] * h[j]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    m
}

fn qq_pairs(params: &ModelParams, t: f64, x: &[f64]) -> Vec<(f64, f64)> {
    let mut sorted = x.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let (_, var, _, _) = sample_moments(&sorted);
    let sd = var.sqrt();
    let (lo, hi) = (sorted[0] - 10.0 * sd, sorted[n - 1] + 10.0 * sd);
    let m = 40_000;
    let h = (hi - lo) / m as f64;
    let grid: Vec<f64> = (0..=m).map(|i| lo + i as f64 * h).collect();
    let dens: Vec<f64> = grid
        .par_iter()
        .map(|&g| params.density(t, g).unwrap_or(0.0))
        .collect();
    let mut cdf = vec![0.0; m + 1];
    for i in 1..=m {
        cdf[i] = cdf[i - 1] + 0.5 * h * (dens[i] + dens[i - 1]);
    }
    let total = cdf[m];
    let mut j = 0;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &xi)| {
            let p = (i as f64 + 0.5) / n as f64 * total;
            while j < m && cdf[j + 1] < p {
                j += 1;
            }
            let q = if j >= m {
                hi
            } else {
                let span = cdf[j + 1] - cdf[j];
                let w = if span > 0.0 {
                    ((p - cdf[j]) / span).clamp(0.0, 1.0)
                } else {
                    0.0
                };
                grid[j] + w * h
            };
            (xi, q)
        })
        .collect()
}

/// Maximum likelihood for BS, NIG or GH increments over the series interval.
pub fn fit_returns_mle(
    family: Family,
    series: &ReturnSeries,
    init: Option<&ModelParams>,
) -> Result<MleFit> {
    let x = &series.returns;
    let dt = series.dt;
    if !(dt > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "observation interval must be positive, got {dt}"
        )));
    }
    if x.len() < 30 {
        return Err(Error::DegenerateData(format!(
            "{} returns, need at least 30",
            x.len()
        )));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::DegenerateData("non-finite return".into()));
    }
    let (m, v, skew, exkurt) = sample_moments(x);
    if !(v > (4.0 * f64::EPSILON * m).powi(2)) {
        return Err(Error::DegenerateData("returns have zero variance".into()));
    }
    if let Some(p) = init {
        if p.family() != family {
            return Err(Error::ParameterMismatch(format!(
                "init is {} but family is {}",
                p.family().name(),
                family.name()
            )));
        }
        p.validate()?;
    }
    // (params, time argument of the density)
    let (eval_t, start): (f64, Vec<f64>) = match family {
        Family::Bs => {
            let p = init
                .map(|p| p.to_vec())
                .unwrap_or_else(|| vec![m / dt, (v / dt).sqrt()]);
            (dt, p)
        }
        Family::Nig => {
            let p = init.map(|p| p.to_vec()).unwrap_or_else(|| {
                let [a, b, d, mu] = nig_moment_match(m, v, skew, exkurt);
                vec![a, b, d / dt, mu / dt]
            });
            (dt, p)
        }
        Family::Gh => {
            let p = init.map(|p| p.to_vec()).unwrap_or_else(|| {
                let [a, b, d, mu] = nig_moment_match(m, v, skew, exkurt);
                vec![a, b, d, mu, -0.5]
            });
            (1.0, p)
        }
        other => {
            return Err(Error::UnsupportedModel(format!(
                "no closed-form density for {} at arbitrary times",
                other.name()
            )));
        }
    };
    let natural = |z: &[f64]| -> Vec<f64> {
        match family {
            Family::Bs => vec![z[0], z[1].exp()],
            _ => from_free(z),
        }
    };
    let neg = |z: &[f64]| -> f64 {
        match ModelParams::from_vec(family, &natural(z)) {
            Ok(p) => -ln_lik(&p, eval_t, x),
            Err(_) => f64::INFINITY,
        }
    };
    let z0 = match family {
        Family::Bs => vec![start[0], start[1].ln()],
        _ => to_free(&start),
    };
    let opts = NelderMeadOptions {
        max_evals: 4000,
        f_tol: 1e-12,
        x_tol: 1e-10,
        initial_step: 0.1,
    };
    let unb = Bounds::unbounded(z0.len());
    let mut run = nelder_mead(neg, &z0, &unb, &opts);
    let mut evaluations = run.evaluations;
    for _ in 0..3 {
        let again = nelder_mead(neg, &run.x, &unb, &opts);
        evaluations += again.evaluations;
        let done = again.f >= run.f - 1e-9;
        if again.f < run.f {
            run = again;
        }
        if done {
            break;
        }
    }
    if !run.f.is_finite() {
        return Err(Error::NonConvergence(
            "likelihood is not finite anywhere on the search path".into(),
        ));
    }
    let best = natural(&run.x);
    let params = ModelParams::from_vec(family, &best)?;
    let loglik = ln_lik(&params, eval_t, x);
    let nat_neg = |p: &[f64]| -> f64 {
        match ModelParams::from_vec(family, p) {
            Ok(p) => -ln_lik(&p, eval_t, x),
            Err(_) => f64::NAN,
        }
    };
    let h = hessian(&nat_neg, &best);
    let stderr = match h.clone().try_inverse() {
        Some(inv) => (0..best.len())
            .map(|i| inv[(i, i)].max(0.0).sqrt())
            .collect(),
        None => vec![f64::NAN; best.len()],
    };
    let qq = qq_pairs(&params, eval_t, x);
    Ok(MleFit {
        params,
        loglik,
        stderr,
        qq,
        evaluations,
    })
}

fn csv_err(e: csv::Error) -> Error {
    let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
    match e.kind() {
        csv::ErrorKind::Io(_) => Error::Io(e.to_string()),
        _ => Error::ParseError {
            line,
            reason: e.to_string(),
        },
    }
}

fn open_csv(path: &Path, header: &[&str]) -> Result<csv::Reader<std::fs::File>> {
    let file =
        std::fs::File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(file);
    let got = rdr.headers().map_err(csv_err)?.clone();
    let got: Vec<&str> = got.iter().map(str::trim).collect();
    if got != header {
        return Err(Error::ParseError {
            line: 1,
            reason: format!(
                "expected header {}, found {}",
                header.join(","),
                got.join(",")
            ),
        });
    }
    Ok(rdr)
}

fn field(rec: &csv::StringRecord, i: usize, name: &str, line: usize) -> Result<f64> {
    let s = rec.get(i).map(str::trim).unwrap_or("");
    s.parse::<f64>().map_err(|_| Error::ParseError {
        line,
        reason: format!("{name}: cannot parse {s:?}"),
    })
}

pub const QUOTES_HEADER: [&str; 4] = ["maturity_years", "strike", "implied_vol", "weight"];
pub const RETURNS_HEADER: [&str; 2] = ["date", "log_return"];

pub fn load_quotes(path: &Path) -> Result<Vec<VolQuote>> {
    let mut rdr = open_csv(path, &QUOTES_HEADER)?;
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(csv_err)?;
        let line = rec.position().map(|p| p.line() as usize).unwrap_or(0);
        let weight = match rec.get(3).map(str::trim) {
            None | Some("") => 1.0,
            Some(_) => field(&rec, 3, "weight", line)?,
        };
        let q = VolQuote {
            maturity_years: field(&rec, 0, "maturity_years", line)?,
            strike: field(&rec, 1, "strike", line)?,
            implied_vol: field(&rec, 2, "implied_vol", line)?,
            weight,
        };
        q.validate().map_err(|e| Error::ParseError {
            line,
            reason: e.to_string(),
        })?;
        out.push(q);
    }
    Ok(out)
}

pub fn write_quotes(path: &Path, quotes: &[VolQuote]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().from_path(path).map_err(csv_err)?;
    w.write_record(QUOTES_HEADER).map_err(csv_err)?;
    for q in quotes {
        w.write_record(
            [q.maturity_years, q.strike, q.implied_vol, q.weight].map(|v| v.to_string()),
        )
        .map_err(csv_err)?;
    }
    w.flush().map_err(Error::from)
}

/// Reads `date,log_return` rows; the interval defaults to one trading day.
pub fn load_returns(path: &Path) -> Result<ReturnSeries> {
    let mut rdr = open_csv(path, &RETURNS_HEADER)?;
    let mut dates = Vec::new();
    let mut returns = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(csv_err)?;
        let line = rec.position().map(|p| p.line() as usize).unwrap_or(0);
        let ds = rec.get(0).map(str::trim).unwrap_or("");
        let d = NaiveDate::parse_from_str(ds, "%Y-%m-%d").map_err(|_| Error::ParseError {
            line,
            reason: format!("date: cannot parse {ds:?}"),
        })?;
        let r = field(&rec, 1, "log_return", line)?;
        if !r.is_finite() {
            return Err(Error::ParseError {
                line,
                reason: "log_return is not finite".into(),
            });
        }
        if dates.last().is_some_and(|p| *p >= d) {
            return Err(Error::ParseError {
                line,
                reason: format!("date {d} is not after the previous row"),
            });
        }
        dates.push(d);
        returns.push(r);
    }
    Ok(ReturnSeries {
        dates,
        returns,
        dt: 1.0 / 252.0,
    })
}

pub fn write_returns(path: &Path, series: &ReturnSeries) -> Result<()> {
    if series.dates.len() != series.returns.len() {
        return Err(Error::InvalidParameter("every return needs a date".into()));
    }
    let mut w = csv::WriterBuilder::new().from_path(path).map_err(csv_err)?;
    w.write_record(RETURNS_HEADER).map_err(csv_err)?;
    for (d, r) in series.dates.iter().zip(&series.returns) {
        w.write_record([d.format("%Y-%m-%d").to_string(), r.to_string()])
            .map_err(csv_err)?;
    }
    w.flush().map_err(Error::from)
}
