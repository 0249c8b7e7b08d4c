#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use chrono::{Days, NaiveDate};
use levy_quant::calibrate::{synthetic_quotes, write_quotes, write_returns, ReturnSeries};
use levy_quant::measure_change::{MarketEnv, PricingModel};
use levy_quant::models::ModelParams;
use levy_quant::simulate::{simulate, TimeGrid};

pub fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_levy-quant")
}

/// Runs the binary; `threads` sets `LEVY_QUANT_THREADS`.
pub fn run(args: &[&str], threads: Option<usize>) -> Output {
    let mut cmd = Command::new(bin());
    cmd.args(args);
    match threads {
        Some(n) => cmd.env("LEVY_QUANT_THREADS", n.to_string()),
        None => cmd.env_remove("LEVY_QUANT_THREADS"),
    };
    cmd.output().expect("binary runs")
}

pub fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).expect("utf-8 stdout")
}

pub fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).expect("utf-8 stderr")
}

pub fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

pub fn nig_truth() -> ModelParams {
    ModelParams::Nig {
        alpha: 6.0,
        beta: -2.0,
        delta: 0.4,
        mu: 0.0,
    }
}

/// 15 NIG quotes at r = 0.05, S₀ = 100.
pub fn write_nig_quotes(dir: &Path) -> PathBuf {
    let env = MarketEnv::new(0.05, 0.0, 100.0).unwrap();
    let model = PricingModel::risk_neutral(nig_truth(), &env).unwrap();
    let quotes = synthetic_quotes(
        &model,
        &env,
        &[0.25, 0.5, 1.0],
        &[80.0, 90.0, 100.0, 110.0, 120.0],
    )
    .unwrap();
    let path = dir.join("quotes.csv");
    write_quotes(&path, &quotes).unwrap();
    path
}

/// Daily NIG log-returns with consecutive calendar dates.
pub fn write_nig_returns(dir: &Path, n: usize, seed: u64) -> PathBuf {
    let truth = ModelParams::Nig {
        alpha: 5.0,
        beta: -1.0,
        delta: 0.02,
        mu: 0.0005,
    };
    let dt = 1.0 / 252.0;
    let grid = TimeGrid::uniform(n as f64 * dt, n).unwrap();
    let path = &simulate(&truth, &grid, 1, seed).unwrap().paths[0];
    let returns: Vec<f64> = path.windows(2).map(|w| w[1] - w[0]).collect();
    let start = NaiveDate::from_ymd_opt(2000, 1, 3).unwrap();
    let dates = (0..n)
        .map(|i| start.checked_add_days(Days::new(i as u64)).unwrap())
        .collect();
    let series = ReturnSeries { dates, returns, dt };
    let file = dir.join("returns.csv");
    write_returns(&file, &series).unwrap();
    file
}
