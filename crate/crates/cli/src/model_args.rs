use clap::Args;
use serde_json::Value;

use levy_quant::measure_change::{MarketEnv, PricingModel};
use levy_quant::models::{Family, ModelParams};

use crate::Failure;

#[derive(Args, Debug)]
pub struct MarketArgs {
    #[arg(long, default_value_t = 100.0)]
    pub s0: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub r: f64,
    /// Continuous dividend yield.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub div: f64,
}

impl MarketArgs {
    pub fn env(&self) -> Result<MarketEnv, Failure> {
        Ok(MarketEnv::new(self.r, self.div, self.s0)?)
    }
}

#[derive(Args, Debug)]
pub struct ModelArgs {
    /// bs, merton, kou, vg, nig, gh, cgmy or meixner.
    #[arg(long)]
    pub model: Option<String>,
    /// Full parameter set as JSON, inline or a file path.
    #[arg(long)]
    pub params: Option<String>,
    /// Location parameter, or `auto` for the martingale drift.
    #[arg(long, default_value = "auto", allow_negative_numbers = true)]
    pub mu: String,
    /// Accept a user drift when pricing.
    #[arg(long)]
    pub allow_non_martingale: bool,
    #[arg(long, allow_negative_numbers = true)]
    pub sigma: Option<f64>,
    /// Jump intensity.
    #[arg(long, allow_negative_numbers = true)]
    pub lambda: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub mu_j: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub sigma_j: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub p: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub theta1: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub theta2: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub theta: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub kappa: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub alpha: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub beta: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub delta: Option<f64>,
    /// GH index λ.
    #[arg(long, allow_negative_numbers = true)]
    pub gh_lambda: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub c: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub g: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub m: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub y: Option<f64>,
}

/// Accepts either bare model JSON or an object holding it under `params`.
pub fn parse_params_json(raw: &str) -> Result<ModelParams, Failure> {
    let text = if raw.trim_start().starts_with('{') {
        raw.to_string()
    } else {
        std::fs::read_to_string(raw).map_err(|e| Failure::io(format!("{raw}: {e}")))?
    };
    let mut v: Value =
        serde_json::from_str(&text).map_err(|e| Failure::config(format!("--params: {e}")))?;
    if v.get("model").is_none() {
        if let Some(inner) = v.get_mut("params") {
            v = inner.take();
        }
    }
    let p: ModelParams =
        serde_json::from_value(v).map_err(|e| Failure::config(format!("--params: {e}")))?;
    Ok(p)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Drift {
    Martingale,
    User,
}

impl ModelArgs {
    fn all_flags(&self) -> Vec<(&'static str, Option<f64>)> {
        vec![
            ("sigma", self.sigma),
            ("lambda", self.lambda),
            ("mu-j", self.mu_j),
            ("sigma-j", self.sigma_j),
            ("p", self.p),
            ("theta1", self.theta1),
            ("theta2", self.theta2),
            ("theta", self.theta),
            ("kappa", self.kappa),
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("delta", self.delta),
            ("gh-lambda", self.gh_lambda),
            ("c", self.c),
            ("g", self.g),
            ("m", self.m),
            ("y", self.y),
        ]
    }

    fn user_mu(&self) -> Result<Option<f64>, Failure> {
        if self.mu.eq_ignore_ascii_case("auto") {
            return Ok(None);
        }
        self.mu.parse::<f64>().map(Some).map_err(|_| {
            Failure::config(format!("--mu must be a number or auto, got {:?}", self.mu))
        })
    }

    /// Parameters and drift handling; `pricing` refuses a user drift unless explicitly allowed.
    pub fn params(&self, pricing: bool) -> Result<(ModelParams, Drift), Failure> {
        let mu = self.user_mu()?;
        if pricing && mu.is_some() && !self.allow_non_martingale {
            return Err(Failure::config(
                "pricing uses the martingale drift; pass --mu auto or add --allow-non-martingale",
            ));
        }
        let drift = if mu.is_some() || (self.allow_non_martingale && self.params.is_some()) {
            Drift::User
        } else {
            Drift::Martingale
        };
        if let Some(raw) = &self.params {
            if let Some((name, _)) = self.all_flags().into_iter().find(|(_, v)| v.is_some()) {
                return Err(Failure::config(format!(
                    "--{name} cannot be combined with --params"
                )));
            }
            let mut p = parse_params_json(raw)?;
            if let Some(m) = &self.model {
                let f = Family::parse(m).map_err(|e| Failure::config(e.to_string()))?;
                if f != p.family() {
                    return Err(Failure::config(format!(
                        "--model {} disagrees with --params ({})",
                        f.name(),
                        p.family().name()
                    )));
                }
            }
            if let Some(mu) = mu {
                p = with_location(p, mu)?;
            }
            p.validate()?;
            return Ok((p, drift));
        }
        let name = self
            .model
            .as_deref()
            .ok_or_else(|| Failure::config("--model or --params is required"))?;
        let family = Family::parse(name).map_err(|e| Failure::config(e.to_string()))?;
        let wanted: Vec<&str> = ModelParams::param_names(family)
            .iter()
            .map(|n| flag_name(family, n))
            .collect();
        let lookup: Vec<(&str, Option<f64>)> = self.all_flags();
        if let Some((extra, _)) = lookup
            .iter()
            .find(|(n, v)| v.is_some() && !wanted.contains(n))
        {
            return Err(Failure::config(format!(
                "--{extra} is not a parameter of {}",
                family.name()
            )));
        }
        let loc = ModelParams::location_index(family);
        if mu.is_some() && loc.is_none() {
            return Err(Failure::config(format!(
                "{} has no location parameter; drop --mu",
                family.name()
            )));
        }
        let mut values = Vec::with_capacity(wanted.len());
        for (i, n) in wanted.iter().enumerate() {
            if Some(i) == loc {
                values.push(mu.unwrap_or(0.0));
                continue;
            }
            let v = lookup
                .iter()
                .find(|(f, _)| f == n)
                .and_then(|(_, v)| *v)
                .ok_or_else(|| Failure::config(format!("{} needs --{n}", family.name())))?;
            values.push(v);
        }
        let p = ModelParams::from_vec(family, &values)?;
        p.validate()?;
        Ok((p, drift))
    }

    pub fn pricing_model(&self, env: &MarketEnv, pricing: bool) -> Result<PricingModel, Failure> {
        let (p, drift) = self.params(pricing)?;
        Ok(match drift {
            Drift::Martingale => PricingModel::risk_neutral(p, env)?,
            Drift::User => PricingModel::physical(p)?,
        })
    }
}

/// Command-line flag for a parameter name.
fn flag_name(family: Family, param: &str) -> &'static str {
    match (family, param) {
        (_, "mu") => "mu",
        (Family::Gh, "lambda") => "gh-lambda",
        (_, "lambda") => "lambda",
        (_, "mu_j") => "mu-j",
        (_, "sigma_j") => "sigma-j",
        (_, "sigma") => "sigma",
        (_, "p") => "p",
        (_, "theta1") => "theta1",
        (_, "theta2") => "theta2",
        (_, "theta") => "theta",
        (_, "kappa") => "kappa",
        (_, "alpha") => "alpha",
        (_, "beta") => "beta",
        (_, "delta") => "delta",
        (_, "c") => "c",
        (_, "g") => "g",
        (_, "m") => "m",
        (_, "y") => "y",
        _ => "unknown",
    }
}

fn with_location(p: ModelParams, mu: f64) -> Result<ModelParams, Failure> {
    let family = p.family();
    let idx = ModelParams::location_index(family).ok_or_else(|| {
        Failure::config(format!(
            "{} has no location parameter; drop --mu",
            family.name()
        ))
    })?;
    let mut v = p.to_vec();
    v[idx] = mu;
    Ok(ModelParams::from_vec(family, &v)?)
}
