mod common;

use common::{code, run, stderr, stdout, write_nig_quotes, write_nig_returns};
use serde_json::Value;

const BS: [&str; 4] = ["--model", "bs", "--sigma", "0.2"];

fn price_args<'a>(extra: &[&'a str]) -> Vec<&'a str> {
    let mut v = vec!["price", "--k", "100", "--t", "1", "--r", "0.05"];
    v.extend_from_slice(&BS);
    v.extend_from_slice(extra);
    v
}

fn error_kind(o: &std::process::Output) -> String {
    let v: Value = serde_json::from_str(stderr(o).lines().last().unwrap()).unwrap();
    v["error"].as_str().unwrap().to_string()
}

#[test]
fn black_scholes_call_text() {
    let o = run(&price_args(&[]), None);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(stdout(&o), "10.4505836\n");
}

#[test]
fn full_precision_and_json() {
    let o = run(&price_args(&["--full-precision", "--format", "json"]), None);
    assert_eq!(code(&o), 0);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    let p = v["price"].as_f64().unwrap();
    assert!((p - 10.450_583_572_185_565).abs() < 1e-9, "{p}");
}

#[test]
fn engines_agree_from_the_command_line() {
    let t = stdout(&run(&price_args(&[]), None))
        .trim()
        .parse::<f64>()
        .unwrap();
    let pide = stdout(&run(&price_args(&["--method", "pide"]), None));
    let p: f64 = pide.lines().next().unwrap().parse().unwrap();
    assert!((p / t - 1.0).abs() < 1e-2);
    let mc = stdout(&run(
        &price_args(&["--method", "mc", "--n-paths", "50000"]),
        None,
    ));
    let lines: Vec<&str> = mc.lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("stderr ") && lines[2].starts_with("ci95 "));
    let m: f64 = lines[0].parse().unwrap();
    let se: f64 = lines[1][7..].parse().unwrap();
    assert!((m - t).abs() < 4.0 * se);
}

#[test]
fn mc_is_reproducible() {
    let args = price_args(&["--method", "mc", "--n-paths", "20000", "--seed", "7"]);
    let a = run(&args, None);
    let b = run(&args, None);
    assert_eq!(a.stdout, b.stdout);
    let c = run(
        &price_args(&["--method", "mc", "--n-paths", "20000", "--seed", "8"]),
        None,
    );
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn user_drift_needs_explicit_permission() {
    let o = run(&price_args(&["--mu", "0.1"]), None);
    assert_eq!(code(&o), 2);
    assert_eq!(error_kind(&o), "ConfigError");
    let o = run(
        &price_args(&["--mu", "0.1", "--allow-non-martingale"]),
        None,
    );
    assert_eq!(code(&o), 0);
}

#[test]
fn error_exit_codes() {
    // parameter flag of another family
    let o = run(&price_args(&["--kappa", "0.3"]), None);
    assert_eq!(code(&o), 2);
    // missing parameter
    let o = run(
        &[
            "price", "--k", "100", "--t", "1", "--model", "nig", "--alpha", "6", "--beta", "-2",
        ],
        None,
    );
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("--delta"));
    // unknown flag
    assert_eq!(code(&run(&["price", "--bogus"], None)), 2);
    // the damping strip of this CGMY is empty for a call
    let o = run(
        &[
            "price", "--k", "100", "--t", "1", "--model", "cgmy", "--c", "1", "--g", "5", "--m",
            "0.9", "--y", "0.5",
        ],
        None,
    );
    assert_eq!(code(&o), 3, "{}", stderr(&o));
    // missing input file
    let o = run(
        &[
            "calibrate",
            "--model",
            "nig",
            "--alpha",
            "6",
            "--beta",
            "-2",
            "--delta",
            "0.4",
            "--quotes",
            "/nonexistent/q.csv",
        ],
        None,
    );
    assert_eq!(code(&o), 4);
    assert_eq!(error_kind(&o), "IoError");
}

#[test]
fn cgmy_cannot_be_simulated() {
    let o = run(
        &[
            "simulate", "--t", "1", "--model", "cgmy", "--c", "1", "--g", "5", "--m", "6", "--y",
            "0.5",
        ],
        None,
    );
    assert_eq!(code(&o), 3);
    assert_eq!(error_kind(&o), "UnsupportedModel");
}

#[test]
fn smile_csv_reports_implied_vols() {
    let o = run(
        &[
            "smile",
            "--maturities",
            "0.5,1",
            "--strikes",
            "90,100,110",
            "--r",
            "0.05",
        ]
        .iter()
        .chain(&BS)
        .copied()
        .collect::<Vec<_>>(),
        None,
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "maturity,strike,price,implied_vol");
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 6);
    for r in rows {
        let iv: f64 = r.split(',').nth(3).unwrap().parse().unwrap();
        assert!((iv - 0.2).abs() < 1e-7, "{r}");
    }
}

#[test]
fn simulate_writes_one_column_per_path() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("paths.csv");
    let o = run(
        &[
            "simulate",
            "--t",
            "1",
            "--steps",
            "12",
            "--n-paths",
            "3",
            "--prices",
            "--out",
            out.to_str().unwrap(),
            "--model",
            "nig",
            "--alpha",
            "6",
            "--beta",
            "-2",
            "--delta",
            "0.4",
        ],
        None,
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = std::fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "t,path_0,path_1,path_2");
    assert_eq!(lines.len(), 14);
    assert_eq!(lines[1], "0,100,100,100");
}

#[test]
fn calibration_output_feeds_back_as_params() {
    let dir = tempfile::tempdir().unwrap();
    let quotes = write_nig_quotes(dir.path());
    let fit = dir.path().join("fit.json");
    let resid = dir.path().join("resid.csv");
    let o = run(
        &[
            "calibrate",
            "--r",
            "0.05",
            "--quotes",
            quotes.to_str().unwrap(),
            "--out",
            fit.to_str().unwrap(),
            "--residuals",
            resid.to_str().unwrap(),
            "--model",
            "nig",
            "--alpha",
            "9",
            "--beta",
            "-3",
            "--delta",
            "0.6",
        ],
        None,
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&fit).unwrap()).unwrap();
    assert!(v["vol_rmse"].as_f64().unwrap() < 1e-4);
    assert_eq!(std::fs::read_to_string(&resid).unwrap().lines().count(), 16);

    let from_fit = run(
        &[
            "price",
            "--k",
            "100",
            "--t",
            "1",
            "--r",
            "0.05",
            "--params",
            fit.to_str().unwrap(),
        ],
        None,
    );
    let truth = run(
        &[
            "price", "--k", "100", "--t", "1", "--r", "0.05", "--model", "nig", "--alpha", "6",
            "--beta", "-2", "--delta", "0.4",
        ],
        None,
    );
    assert_eq!(code(&from_fit), 0, "{}", stderr(&from_fit));
    let a: f64 = stdout(&from_fit).trim().parse().unwrap();
    let b: f64 = stdout(&truth).trim().parse().unwrap();
    assert!((a - b).abs() < 1e-3, "{a} vs {b}");
}

#[test]
fn fit_returns_writes_params_and_qq() {
    let dir = tempfile::tempdir().unwrap();
    let returns = write_nig_returns(dir.path(), 2000, 5);
    let out = dir.path().join("mle.json");
    let qq = dir.path().join("qq.csv");
    let o = run(
        &[
            "fit-returns",
            "--model",
            "nig",
            "--returns",
            returns.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
            "--qq",
            qq.to_str().unwrap(),
        ],
        None,
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v["n"], 2000);
    assert_eq!(v["stderr"].as_array().unwrap().len(), 4);
    assert_eq!(v["params"]["model"], "nig");
    assert_eq!(
        std::fs::read_to_string(&qq)
            .unwrap()
            .lines()
            .next()
            .unwrap(),
        "empirical,model"
    );

    // the fitted parameters classify as a valid model
    let c = run(
        &[
            "classify",
            "--params",
            out.to_str().unwrap(),
            "--allow-non-martingale",
        ],
        None,
    );
    assert_eq!(code(&c), 0, "{}", stderr(&c));

    let bad = run(
        &[
            "fit-returns",
            "--model",
            "vg",
            "--returns",
            returns.to_str().unwrap(),
        ],
        None,
    );
    assert_eq!(code(&bad), 2);
}

#[test]
fn malformed_returns_report_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("r.csv");
    std::fs::write(&file, "date,log_return\n2020-01-02,0.01\n2020-01-03,abc\n").unwrap();
    let o = run(
        &[
            "fit-returns",
            "--model",
            "bs",
            "--returns",
            file.to_str().unwrap(),
        ],
        None,
    );
    assert_eq!(code(&o), 3);
    assert_eq!(error_kind(&o), "ParseError");
    assert!(stderr(&o).contains('3'), "{}", stderr(&o));
}

#[test]
fn classify_reports_activity() {
    let o = run(
        &[
            "classify", "--model", "nig", "--alpha", "6", "--beta", "-2", "--delta", "0.4",
        ],
        None,
    );
    assert_eq!(code(&o), 0);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["model"], "nig");
    assert_eq!(v["gaussian_variance"], 0.0);
    let text = stdout(&o);
    assert!(text.contains("infinite"), "{text}");

    let o = run(
        &[
            "classify",
            "--model",
            "merton",
            "--sigma",
            "0.2",
            "--lambda",
            "1",
            "--mu-j",
            "-0.1",
            "--sigma-j",
            "0.1",
        ],
        None,
    );
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!((v["gaussian_variance"].as_f64().unwrap() - 0.04).abs() < 1e-12);
}

#[test]
fn bad_thread_count_is_a_config_error() {
    let mut cmd = std::process::Command::new(common::bin());
    let o = cmd
        .args(price_args(&[]))
        .env("LEVY_QUANT_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(code(&o), 2);
}

#[test]
fn classify_uses_the_pricing_triplet() {
    use levy_quant::measure_change::{MarketEnv, PricingModel};
    let o = run(
        &["classify", "--full-precision", "--r", "0.05", "--div", "0.01", "--model", "nig", "--alpha", "6", "--beta", "-2", "--delta", "0.4"],
        None,
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    let env = MarketEnv::new(0.05, 0.01, 100.0).unwrap();
    let m = PricingModel::risk_neutral(common::nig_truth(), &env).unwrap();
    let b = m.triplet().unwrap().b();
    assert!((v["drift"].as_f64().unwrap() - b).abs() < 1e-15, "{} vs {b}", v["drift"]);
}
