mod model_args;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use levy_quant::calibrate::{
    calibrate_smile, fit_returns_mle, implied_vol, load_quotes, load_returns,
};
use levy_quant::levy::classify;
use levy_quant::models::Family;
use levy_quant::pricing::{
    mc_price, price_smile, solve_pide, transform_price, PayoffKind, PayoffSpec, PideGrid,
    QuadratureSpec,
};
use levy_quant::simulate::{simulate_model, TimeGrid};

use model_args::{MarketArgs, ModelArgs};
use output::{csv_table, write_all, Fmt};

/// Failure reported as `{"error", "message"}` on stderr.
#[derive(Debug)]
pub struct Failure {
    code: u8,
    kind: String,
    message: String,
}

impl Failure {
    pub fn config(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            kind: "ConfigError".into(),
            message: message.into(),
        }
    }

    pub fn io(message: impl Into<String>) -> Self {
        Self {
            code: 4,
            kind: "IoError".into(),
            message: message.into(),
        }
    }
}

impl From<levy_quant::Error> for Failure {
    fn from(e: levy_quant::Error) -> Self {
        let code = if matches!(e, levy_quant::Error::Io(_)) {
            4
        } else {
            3
        };
        Self {
            code,
            kind: e.kind().into(),
            message: e.to_string(),
        }
    }
}

type Outcome = Result<(), Failure>;

#[derive(Parser)]
#[command(
    name = "levy-quant",
    version,
    about = "Exponential-Lévy models from the command line"
)]
struct Cli {
    /// Print floats with full round-trip precision instead of 9 significant digits.
    #[arg(long, global = true)]
    full_precision: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Price one European option.
    Price(PriceArgs),
    /// Price a maturity x strike grid and report implied vols.
    Smile(SmileArgs),
    /// Simulate log-price paths.
    Simulate(SimulateArgs),
    /// Fit a model to an implied-vol quotes CSV.
    Calibrate(CalibrateArgs),
    /// Fit a return distribution by maximum likelihood.
    FitReturns(FitArgs),
    /// Report path properties of the model's Lévy triplet.
    Classify(ClassifyArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Method {
    Transform,
    Pide,
    Mc,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Kind {
    Call,
    Put,
    DigitalCall,
    DigitalPut,
}

impl From<Kind> for PayoffKind {
    fn from(k: Kind) -> Self {
        match k {
            Kind::Call => PayoffKind::Call,
            Kind::Put => PayoffKind::Put,
            Kind::DigitalCall => PayoffKind::DigitalCall,
            Kind::DigitalPut => PayoffKind::DigitalPut,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Csv,
    Json,
}

#[derive(Args)]
struct PriceArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    market: MarketArgs,
    #[arg(long)]
    k: f64,
    #[arg(long)]
    t: f64,
    #[arg(long, value_enum, default_value = "call")]
    kind: Kind,
    #[arg(long, value_enum, default_value = "transform")]
    method: Method,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
    /// Absolute tolerance of the inversion integral.
    #[arg(long, default_value_t = 1e-10)]
    abs_tol: f64,
    #[arg(long, allow_negative_numbers = true)]
    damping: Option<f64>,
    #[arg(long, default_value_t = 100_000)]
    n_paths: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long)]
    antithetic: bool,
    #[arg(long, default_value_t = 400)]
    nx: usize,
    #[arg(long, default_value_t = 200)]
    nt: usize,
    /// Half-width of the PIDE domain in standard deviations of L_T.
    #[arg(long, default_value_t = 8.0)]
    width: f64,
    #[arg(long, default_value_t = 0.01)]
    eps_jump: f64,
    /// Implicit weight of the PIDE local terms.
    #[arg(long, default_value_t = 0.5)]
    pide_theta: f64,
    /// Write the PIDE solution as `x,t,f` rows.
    #[arg(long)]
    surface: Option<PathBuf>,
}

#[derive(Args)]
struct SmileArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    market: MarketArgs,
    #[arg(long, value_delimiter = ',', required = true)]
    maturities: Vec<f64>,
    #[arg(long, value_delimiter = ',', required = true)]
    strikes: Vec<f64>,
    #[arg(long, value_enum, default_value = "call")]
    kind: Kind,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    market: MarketArgs,
    #[arg(long)]
    t: f64,
    #[arg(long, default_value_t = 252)]
    steps: usize,
    #[arg(long, default_value_t = 10)]
    n_paths: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Write `S₀e^{L_t}` instead of `L_t`.
    #[arg(long)]
    prices: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CalibrateArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    market: MarketArgs,
    #[arg(long)]
    quotes: PathBuf,
    /// Fitted parameters and fit statistics as JSON.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    residuals: Option<PathBuf>,
}

#[derive(Args)]
struct FitArgs {
    /// One of bs, nig, gh.
    #[arg(long)]
    model: String,
    /// Starting point as model JSON.
    #[arg(long)]
    params: Option<String>,
    #[arg(long)]
    returns: PathBuf,
    /// Years per observation.
    #[arg(long, default_value_t = 1.0 / 252.0)]
    dt: f64,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    qq: Option<PathBuf>,
}

#[derive(Args)]
struct ClassifyArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    market: MarketArgs,
}

fn price(a: PriceArgs, fmt: Fmt) -> Outcome {
    let env = a.market.env()?;
    let model = a.model.pricing_model(&env, true)?;
    let payoff = PayoffSpec::new(a.kind.into(), a.k)?;
    let mut report = serde_json::Map::new();
    let mut text = Vec::new();
    match a.method {
        Method::Transform => {
            let mut quad = QuadratureSpec {
                abs_tol: a.abs_tol,
                ..QuadratureSpec::default()
            };
            quad.damping = a.damping;
            let p = transform_price(&model, &env, a.t, &payoff, &quad)?;
            if let Some(w) = &p.warning {
                eprintln!(
                    "{}",
                    json!({ "warning": "QuadratureWarning", "message": w })
                );
            }
            text.push(fmt.num(p.price));
            report.insert("price".into(), json!(p.price));
            report.insert("damping".into(), json!(p.damping));
        }
        Method::Pide => {
            let mut grid = PideGrid::around(&model, a.t, a.width, a.nx, a.nt)?;
            grid.eps_jump = a.eps_jump;
            grid.theta = a.pide_theta;
            let s = solve_pide(&model, &env, a.t, &payoff, &grid)?;
            text.push(fmt.num(s.price));
            report.insert("price".into(), json!(s.price));
            if let Some(d) = s.eps_change {
                text.push(format!("eps_change {}", fmt.num(d)));
                report.insert("eps_change".into(), json!(d));
            }
            if let Some(path) = &a.surface {
                let rows = s
                    .triples()
                    .map(|(x, t, f)| vec![fmt.num(x), fmt.num(t), fmt.num(f)]);
                write_all(Some(path), &csv_table(&["x", "t", "f"], rows))?;
            }
        }
        Method::Mc => {
            let r = mc_price(
                &model,
                &env,
                a.t,
                &|s| payoff.value(s),
                a.n_paths,
                a.seed,
                a.antithetic,
            )?;
            text.push(fmt.num(r.price));
            text.push(format!("stderr {}", fmt.num(r.stderr)));
            text.push(format!("ci95 {} {}", fmt.num(r.ci95.0), fmt.num(r.ci95.1)));
            report.insert("price".into(), json!(r.price));
            report.insert("stderr".into(), json!(r.stderr));
            report.insert("ci95".into(), json!([r.ci95.0, r.ci95.1]));
            report.insert("n_paths".into(), json!(r.n_paths));
            report.insert("seed".into(), json!(r.seed));
        }
    }
    let body = match a.format {
        Format::Json => fmt.json_string(&report)? + "\n",
        _ => text.join("\n") + "\n",
    };
    write_all(None, &body)
}

#[derive(Serialize)]
struct SmileRow {
    maturity: f64,
    strike: f64,
    price: f64,
    implied_vol: Option<f64>,
}

fn smile(a: SmileArgs, fmt: Fmt) -> Outcome {
    let env = a.market.env()?;
    let model = a.model.pricing_model(&env, true)?;
    let kind: PayoffKind = a.kind.into();
    let grid = price_smile(
        &model,
        &env,
        &a.maturities,
        &a.strikes,
        kind,
        &QuadratureSpec::default(),
    );
    let mut rows = Vec::new();
    for (&t, row) in a.maturities.iter().zip(grid) {
        for (&k, p) in a.strikes.iter().zip(row) {
            let price = p?;
            let iv = match kind {
                PayoffKind::Call | PayoffKind::Put => {
                    Some(implied_vol(&env, t, k, price, kind)?.sigma)
                }
                _ => None,
            };
            rows.push(SmileRow {
                maturity: t,
                strike: k,
                price,
                implied_vol: iv,
            });
        }
    }
    let body = match a.format {
        Format::Json => fmt.json_string(&rows)? + "\n",
        _ => csv_table(
            &["maturity", "strike", "price", "implied_vol"],
            rows.iter().map(|r| {
                vec![
                    fmt.num(r.maturity),
                    fmt.num(r.strike),
                    fmt.num(r.price),
                    r.implied_vol.map(|v| fmt.num(v)).unwrap_or_default(),
                ]
            }),
        ),
    };
    write_all(a.out.as_deref(), &body)
}

fn simulate(a: SimulateArgs, fmt: Fmt) -> Outcome {
    let env = a.market.env()?;
    let model = a.model.pricing_model(&env, false)?;
    let grid = TimeGrid::uniform(a.t, a.steps)?;
    let bundle = simulate_model(&model, &grid, a.n_paths, a.seed)?;
    let mut header = vec!["t".to_string()];
    header.extend((0..bundle.paths.len()).map(|k| format!("path_{k}")));
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let rows = grid.times().iter().enumerate().map(|(i, &t)| {
        let mut row = vec![fmt.num(t)];
        row.extend(
            bundle
                .paths
                .iter()
                .map(|p| fmt.num(if a.prices { env.s0 * p[i].exp() } else { p[i] })),
        );
        row
    });
    write_all(a.out.as_deref(), &csv_table(&header, rows))
}

fn calibrate(a: CalibrateArgs, fmt: Fmt) -> Outcome {
    let env = a.market.env()?;
    let (init, _) = a.model.params(true)?;
    let quotes = load_quotes(&a.quotes)?;
    let fit = calibrate_smile(init.family(), &quotes, &env, &init, None)?;
    let body = json!({
        "params": fit.params,
        "vol_rmse": fit.vol_rmse,
        "iterations": fit.iterations,
        "restarts_used": fit.restarts_used,
    });
    write_all(a.out.as_deref(), &(fmt.json_string(&body)? + "\n"))?;
    if let Some(path) = &a.residuals {
        let rows = fit.residuals.iter().map(|r| {
            vec![
                fmt.num(r.maturity_years),
                fmt.num(r.strike),
                fmt.num(r.market_vol),
                fmt.num(r.model_vol),
            ]
        });
        write_all(
            Some(path),
            &csv_table(
                &["maturity_years", "strike", "market_vol", "model_vol"],
                rows,
            ),
        )?;
    }
    Ok(())
}

fn fit_returns(a: FitArgs, fmt: Fmt) -> Outcome {
    let family = Family::parse(&a.model).map_err(|e| Failure::config(e.to_string()))?;
    if !matches!(family, Family::Bs | Family::Nig | Family::Gh) {
        return Err(Failure::config(format!(
            "fit-returns supports bs, nig and gh, not {}",
            family.name()
        )));
    }
    let init = a
        .params
        .as_deref()
        .map(model_args::parse_params_json)
        .transpose()?;
    let mut series = load_returns(&a.returns)?;
    series.dt = a.dt;
    let fit = fit_returns_mle(family, &series, init.as_ref())?;
    let body = json!({
        "params": fit.params,
        "loglik": fit.loglik,
        "stderr": fit.stderr,
        "n": series.returns.len(),
        "dt": series.dt,
    });
    write_all(a.out.as_deref(), &(fmt.json_string(&body)? + "\n"))?;
    if let Some(path) = &a.qq {
        let rows = fit.qq.iter().map(|(e, m)| vec![fmt.num(*e), fmt.num(*m)]);
        write_all(Some(path), &csv_table(&["empirical", "model"], rows))?;
    }
    Ok(())
}

fn classify_cmd(a: ClassifyArgs, fmt: Fmt) -> Outcome {
    let env = a.market.env()?;
    let model = a.model.pricing_model(&env, false)?;
    let triplet = model.triplet()?;
    let report = classify(&triplet)?;
    let mut body = serde_json::to_value(report).map_err(|e| Failure::config(e.to_string()))?;
    body["model"] = json!(model.params.family().name());
    body["drift"] = json!(triplet.b());
    body["gaussian_variance"] = json!(triplet.c());
    write_all(None, &(fmt.json_string(&body)? + "\n"))
}

fn configure_threads() -> Outcome {
    let Ok(raw) = std::env::var("LEVY_QUANT_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .map_err(|_| Failure::config(format!("LEVY_QUANT_THREADS must be a count, got {raw:?}")))?;
    if n > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::config(format!("cannot size the worker pool: {e}")))?;
    }
    Ok(())
}

fn run(cli: Cli) -> Outcome {
    configure_threads()?;
    let fmt = Fmt {
        full: cli.full_precision,
    };
    match cli.command {
        Command::Price(a) => price(a, fmt),
        Command::Smile(a) => smile(a, fmt),
        Command::Simulate(a) => simulate(a, fmt),
        Command::Calibrate(a) => calibrate(a, fmt),
        Command::FitReturns(a) => fit_returns(a, fmt),
        Command::Classify(a) => classify_cmd(a, fmt),
    }
}

fn fail(f: Failure) -> ExitCode {
    eprintln!("{}", json!({ "error": f.kind, "message": f.message }));
    ExitCode::from(f.code)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(
                e.kind(),
                ErrorKind::DisplayHelp
                    | ErrorKind::DisplayVersion
                    | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand
            ) {
                e.exit();
            }
            return fail(Failure::config(e.to_string().trim_end().to_string()));
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => fail(f),
    }
}
