//! One PASS/FAIL line per acceptance criterion; exits non-zero if any fails.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::Instant;

use num_complex::Complex64;

use levy_quant::calibrate::{
    bs_price, calibrate_smile, fit_returns_mle, synthetic_quotes, ReturnSeries,
};
use levy_quant::levy::{
    infinite_divisibility_residual, levy_exponent_by_quadrature, JumpLaw, LevyMeasure, LevyTriplet,
    Region, Truncation,
};
use levy_quant::measure_change::{
    esscher_params, market_price_of_risk, martingale_residual, MarketEnv, PricingModel, RiskCase,
};
use levy_quant::models::measures::GhLevy;
use levy_quant::models::{nig_convolve, Family, ModelParams};
use levy_quant::numerics::quad::{integrate, QuadOptions};
use levy_quant::pricing::{
    mc_price, solve_pide, transform_price, PayoffKind, PayoffSpec, PideGrid, QuadratureSpec,
};
use levy_quant::simulate::{mean_var, poisson_integral_stats, simulate, simulate_model, TimeGrid};

type Check = (bool, String);

fn zoo() -> Vec<ModelParams> {
    vec![
        ModelParams::Bs {
            mu: 0.03,
            sigma: 0.2,
        },
        ModelParams::Merton {
            mu: 0.01,
            sigma: 0.15,
            lambda: 1.0,
            mu_j: -0.1,
            sigma_j: 0.15,
        },
        ModelParams::Kou {
            mu: 0.02,
            sigma: 0.1,
            lambda: 2.0,
            p: 0.4,
            theta1: 12.0,
            theta2: 8.0,
        },
        ModelParams::Vg {
            sigma: 0.2,
            theta: -0.15,
            kappa: 0.3,
        },
        ModelParams::Nig {
            alpha: 6.0,
            beta: -2.0,
            delta: 0.4,
            mu: 0.01,
        },
        ModelParams::Gh {
            alpha: 4.0,
            beta: -1.0,
            delta: 0.5,
            mu: 0.02,
            lambda: 1.5,
        },
        ModelParams::Cgmy {
            c: 0.5,
            g: 6.0,
            m: 9.0,
            y: 0.6,
        },
        ModelParams::Meixner {
            alpha: 0.3,
            beta: -0.5,
            delta: 1.2,
        },
    ]
}

fn re(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

fn cross_engine() -> Check {
    let start = Instant::now();
    let env = MarketEnv::new(0.05, 0.0, 100.0).unwrap();
    let quad = QuadratureSpec::default();
    let strikes = [80.0, 90.0, 100.0, 110.0, 120.0];
    let models: Vec<PricingModel> = [
        ModelParams::Bs {
            mu: 0.0,
            sigma: 0.2,
        },
        ModelParams::Merton {
            mu: 0.0,
            sigma: 0.15,
            lambda: 1.0,
            mu_j: -0.1,
            sigma_j: 0.15,
        },
        ModelParams::Nig {
            alpha: 6.0,
            beta: -2.0,
            delta: 0.4,
            mu: 0.0,
        },
    ]
    .into_iter()
    .map(|p| PricingModel::risk_neutral(p, &env).unwrap())
    .collect();
    let mut bs_err: f64 = 0.0;
    let mut pide_rel: f64 = 0.0;
    let mut covered = 0;
    for (i, m) in models.iter().enumerate() {
        let grid = PideGrid::around(m, 1.0, 8.0, 400, 200).unwrap();
        for k in strikes {
            let call = PayoffSpec::call(k).unwrap();
            let exact = transform_price(m, &env, 1.0, &call, &quad).unwrap().price;
            if i == 0 {
                bs_err = bs_err
                    .max((exact - bs_price(&env, 1.0, k, 0.2, PayoffKind::Call).unwrap()).abs());
            }
            let pide = solve_pide(m, &env, 1.0, &call, &grid).unwrap().price;
            pide_rel = pide_rel.max((pide / exact - 1.0).abs());
            let mc = mc_price(m, &env, 1.0, &|s| call.value(s), 100_000, 42, false).unwrap();
            if (mc.price - exact).abs() <= 3.0 * mc.stderr {
                covered += 1;
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    (
        bs_err < 1e-6 && pide_rel < 1e-2 && covered >= 14 && secs < 300.0,
        format!("BS |Δ| {bs_err:.2e}, PIDE rel {pide_rel:.2e}, MC covers {covered}/15, {secs:.1}s"),
    )
}

fn martingales() -> Check {
    let env = MarketEnv::new(0.05, 0.01, 100.0).unwrap();
    let n = 100_000;
    let mut worst_z: f64 = 0.0;
    let mut worst_res: f64 = 0.0;
    let mut count = 0;
    for p in zoo().into_iter().filter(ModelParams::simulable) {
        let m = PricingModel::risk_neutral(p, &env).unwrap();
        worst_res = worst_res.max(
            martingale_residual(&m.triplet().unwrap(), &env)
                .unwrap()
                .abs(),
        );
        let grid = TimeGrid::uniform(1.0, 1).unwrap();
        let x: Vec<f64> = simulate_model(&m, &grid, n, 7)
            .unwrap()
            .terminal()
            .iter()
            .map(|l| (l - env.carry()).exp())
            .collect();
        let (mean, var) = mean_var(&x);
        worst_z = worst_z.max(((mean - 1.0) / (var / n as f64).sqrt()).abs());
        count += 1;
    }
    (
        worst_z < 4.0 && worst_res < 1e-12,
        format!("{count} models, max |z| {worst_z:.2}, max residual {worst_res:.1e}"),
    )
}

fn identities() -> Check {
    let mut psi0: f64 = 0.0;
    let mut phi0: f64 = 0.0;
    let mut herm: f64 = 0.0;
    let mut semi: f64 = 0.0;
    let mut trip: f64 = 0.0;
    for p in zoo() {
        psi0 = psi0.max(p.exponent(re(0.0)).unwrap().norm());
        phi0 = phi0.max((p.cf(0.7, re(0.0)).unwrap() - 1.0).norm());
        let t = p.triplet().unwrap();
        for u in [-7.0, -1.3, 0.4, 2.0, 11.0] {
            herm = herm.max((p.cf(0.8, re(u)).unwrap() - p.cf(0.8, re(-u)).unwrap().conj()).norm());
            semi = semi.max(
                (p.cf(1.1, re(u)).unwrap() - p.cf(0.4, re(u)).unwrap() * p.cf(0.7, re(u)).unwrap())
                    .norm(),
            );
            let closed = p.exponent(re(u)).unwrap();
            let num = match p {
                ModelParams::Gh {
                    alpha,
                    beta,
                    delta,
                    lambda,
                    ..
                } => {
                    let jumps = GhLevy {
                        alpha,
                        beta,
                        delta,
                        lambda,
                    }
                    .compensated_exponent_by_mixture(re(u))
                    .unwrap();
                    Complex64::i() * u * t.b() - 0.5 * t.c() * u * u + jumps
                }
                _ => levy_exponent_by_quadrature(&t, re(u)).unwrap(),
            };
            trip = trip.max((closed - num).norm());
        }
    }
    let grid: Vec<f64> = (-20..=20).map(|k| k as f64 * 0.25).collect();
    let normal = LevyTriplet::new(0.1, 0.09, LevyMeasure::Zero, Truncation::CompensateAll).unwrap();
    let poisson = LevyTriplet::new(
        0.0,
        0.0,
        LevyMeasure::finite(3.0, JumpLaw::Point(1.0)).unwrap(),
        Truncation::TruncateUnit,
    )
    .unwrap();
    let mut div: f64 = 0.0;
    for n in [2, 5, 12] {
        div = div.max(infinite_divisibility_residual(&normal, n, &grid).unwrap());
        div = div.max(infinite_divisibility_residual(&poisson, n, &grid).unwrap());
    }
    (
        psi0 == 0.0 && phi0 < 1e-15 && herm < 1e-12 && semi < 1e-12 && div < 1e-12 && trip < 1e-8,
        format!("ψ(0) {psi0:.0e}, Hermitian {herm:.1e}, semigroup {semi:.1e}, divisibility {div:.1e}, triplet/cf {trip:.1e}"),
    )
}

fn poisson_measure() -> Check {
    let law = JumpLaw::Normal { mean: 0.1, sd: 0.3 };
    let nu = LevyMeasure::finite(3.0, law).unwrap();
    let cases: [(Box<dyn Fn(f64) -> f64 + Sync>, Region); 3] = [
        (Box::new(|x| x), Region::outside(0.1)),
        (Box::new(|x| x * x), Region::interval(0.2, f64::INFINITY)),
        (
            Box::new(|_| 1.0),
            Region::interval(f64::NEG_INFINITY, -0.05),
        ),
    ];
    let mut worst: f64 = 0.0;
    for (i, (f, region)) in cases.iter().enumerate() {
        let s = poisson_integral_stats(3.0, law, f, region, 2.0, 100_000, 5 + i as u64).unwrap();
        let fourth = 2.0
            * nu.integrate(|x| f(x).powi(4), region, QuadOptions::abs(1e-13))
                .unwrap();
        worst = worst.max(s.mean_z().abs()).max(s.var_z(fourth).abs());
    }
    (worst < 4.0, format!("3 (f, A) pairs, max |z| {worst:.2}"))
}

fn esscher() -> Check {
    let mut shift: f64 = 0.0;
    let mut identity = true;
    for p in [
        ModelParams::Nig {
            alpha: 6.0,
            beta: -2.0,
            delta: 0.4,
            mu: 0.01,
        },
        ModelParams::Kou {
            mu: 0.02,
            sigma: 0.1,
            lambda: 2.0,
            p: 0.4,
            theta1: 12.0,
            theta2: 8.0,
        },
    ] {
        for theta in [-1.5, 0.7] {
            let q = esscher_params(&p, theta).unwrap();
            for k in 0..21 {
                let z = -2.0 + 0.2 * k as f64;
                let rhs = p.cumulant(z + theta).unwrap() - p.cumulant(theta).unwrap();
                shift = shift.max((q.cumulant(z).unwrap() - rhs).abs());
            }
        }
        identity &= esscher_params(&p, 0.0).unwrap() == p;
    }
    let env = MarketEnv::new(0.04, 0.0, 1.0).unwrap();
    let (b, c, alpha, lambda) = (0.09, 0.04, -0.2, 1.5);
    let bs = market_price_of_risk(RiskCase::BlackScholes { b, c }, &env).unwrap();
    let po = market_price_of_risk(RiskCase::Poisson { b, alpha, lambda }, &env).unwrap();
    let mut closed = (bs.beta.unwrap() - ((0.04 - b) / c - 0.5)).abs();
    closed =
        closed.max((po.y.unwrap() - (0.04 - b + alpha * lambda) / (alpha.exp_m1() * lambda)).abs());
    let mut resid = bs.residual.abs().max(po.residual.abs());
    for eps in [0.25, 0.5, 0.75] {
        let jd = market_price_of_risk(
            RiskCase::JumpDiffusion {
                b,
                c,
                alpha,
                lambda,
                eps,
            },
            &env,
        )
        .unwrap();
        resid = resid.max(jd.residual.abs());
    }
    (
        shift < 1e-10 && identity && closed < 1e-14 && resid < 1e-14,
        format!("shift {shift:.1e}, θ=0 identity {identity}, closed forms {closed:.1e}, residual {resid:.1e}"),
    )
}

fn moments() -> Check {
    let n = 100_000;
    let mut worst: f64 = 0.0;
    for p in [
        ModelParams::Merton {
            mu: 0.05,
            sigma: 0.15,
            lambda: 1.0,
            mu_j: -0.1,
            sigma_j: 0.15,
        },
        ModelParams::Kou {
            mu: 0.02,
            sigma: 0.1,
            lambda: 2.0,
            p: 0.4,
            theta1: 12.0,
            theta2: 8.0,
        },
        ModelParams::Nig {
            alpha: 6.0,
            beta: -2.0,
            delta: 0.4,
            mu: 0.01,
        },
        ModelParams::Vg {
            sigma: 0.2,
            theta: -0.15,
            kappa: 0.3,
        },
    ] {
        let x = simulate(&p, &TimeGrid::uniform(1.0, 4).unwrap(), n, 99)
            .unwrap()
            .terminal();
        let m = p.moments().unwrap();
        let (mean, var) = mean_var(&x);
        let m4 = x.iter().map(|v| (v - mean).powi(4)).sum::<f64>() / n as f64;
        let zm = (mean - m.mean) / (var / n as f64).sqrt();
        let zv = (var - m.variance) / ((m4 - var * var) / n as f64).sqrt();
        worst = worst.max(zm.abs()).max(zv.abs());
    }
    let a = ModelParams::Nig {
        alpha: 6.0,
        beta: -2.0,
        delta: 0.4,
        mu: 0.01,
    };
    let b = ModelParams::Nig {
        alpha: 6.0,
        beta: -2.0,
        delta: 0.7,
        mu: -0.03,
    };
    let s = nig_convolve(&a, &b).unwrap();
    let mut conv: f64 = 0.0;
    for u in [-9.0, -1.0, 0.3, 2.5, 20.0] {
        conv = conv.max(
            (s.cf(1.0, re(u)).unwrap() - a.cf(1.0, re(u)).unwrap() * b.cf(1.0, re(u)).unwrap())
                .norm(),
        );
    }
    (
        worst < 4.0 && conv < 1e-12,
        format!("max |z| {worst:.2}, NIG closure {conv:.1e}"),
    )
}

fn numeric_laplace(p: &PayoffSpec, z: Complex64) -> Complex64 {
    let k = p.strike;
    let edge = -k.ln();
    let opts = QuadOptions::abs(1e-13);
    let run =
        |f: &dyn Fn(f64) -> Complex64, a: f64, b: f64| integrate(f, a, b, opts).unwrap().value;
    match p.kind {
        PayoffKind::Call => run(
            &|x| (-(z + 1.0) * x).exp() - k * (-z * x).exp(),
            f64::NEG_INFINITY,
            edge,
        ),
        PayoffKind::Put => run(
            &|x| k * (-z * x).exp() - (-(z + 1.0) * x).exp(),
            edge,
            f64::INFINITY,
        ),
        PayoffKind::DigitalCall => run(&|x| (-z * x).exp(), f64::NEG_INFINITY, edge),
        PayoffKind::DigitalPut => run(&|x| (-z * x).exp(), edge, f64::INFINITY),
    }
}

fn transform_internals() -> Check {
    let mut lap: f64 = 0.0;
    for (kind, base) in [
        (PayoffKind::Call, -3.5),
        (PayoffKind::Put, 0.0),
        (PayoffKind::DigitalCall, -2.5),
        (PayoffKind::DigitalPut, 0.0),
    ] {
        let p = PayoffSpec::new(kind, 1.0).unwrap();
        for (a, b) in [(0.3, 0.0), (0.5, 1.7), (1.2, -4.0), (2.0, 9.5), (0.8, 0.2)] {
            let z = Complex64::new(base + a, b);
            lap = lap.max((p.laplace(z).unwrap() - numeric_laplace(&p, z)).norm());
        }
    }
    let env = MarketEnv::new(0.05, 0.02, 100.0).unwrap();
    let m = PricingModel::risk_neutral(
        ModelParams::Nig {
            alpha: 6.0,
            beta: -2.0,
            delta: 0.4,
            mu: 0.0,
        },
        &env,
    )
    .unwrap();
    let quad = QuadratureSpec::default();
    let t = 0.75;
    let price = |kind, k, q: &QuadratureSpec| {
        transform_price(&m, &env, t, &PayoffSpec::new(kind, k).unwrap(), q)
            .unwrap()
            .price
    };
    let mut damp: f64 = 0.0;
    for (kind, r1, r2) in [
        (PayoffKind::Call, -1.25, -2.5),
        (PayoffKind::Put, 0.5, 2.0),
        (PayoffKind::DigitalCall, -0.5, -2.0),
    ] {
        damp = damp.max(
            (price(kind, 105.0, &quad.with_damping(r1))
                - price(kind, 105.0, &quad.with_damping(r2)))
            .abs(),
        );
    }
    let mut parity: f64 = 0.0;
    for k in [80.0, 100.0, 125.0] {
        let fwd = 100.0 * (-0.02 * t).exp() - k * (-0.05 * t).exp();
        parity = parity.max(
            (price(PayoffKind::Call, k, &quad) - price(PayoffKind::Put, k, &quad) - fwd).abs(),
        );
        let df = (-0.05 * t).exp();
        parity = parity.max(
            (price(PayoffKind::DigitalCall, k, &quad) + price(PayoffKind::DigitalPut, k, &quad)
                - df)
                .abs(),
        );
    }
    (
        lap < 1e-8 && damp < 10.0 * quad.abs_tol && parity < 1e-8,
        format!("Laplace {lap:.1e}, damping shift {damp:.1e}, parity {parity:.1e}"),
    )
}

fn calibration() -> Check {
    let env = MarketEnv::new(0.05, 0.0, 100.0).unwrap();
    let truth = common::nig_truth();
    let model = PricingModel::risk_neutral(truth, &env).unwrap();
    let quotes = synthetic_quotes(
        &model,
        &env,
        &[0.25, 0.5, 1.0],
        &[80.0, 90.0, 100.0, 110.0, 120.0],
    )
    .unwrap();
    let init = ModelParams::Nig {
        alpha: 9.0,
        beta: -3.0,
        delta: 0.6,
        mu: 0.0,
    };
    let start = Instant::now();
    let fit = calibrate_smile(Family::Nig, &quotes, &env, &init, None).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let rel = fit.params.to_vec()[..3]
        .iter()
        .zip(&truth.to_vec()[..3])
        .map(|(g, t)| (g / t - 1.0).abs())
        .fold(0.0, f64::max);
    (
        quotes.len() == 15 && fit.vol_rmse < 1e-4 && rel < 1e-2 && secs < 120.0,
        format!(
            "{} quotes, vol RMSE {:.1e}, max rel error {rel:.1e}, {secs:.1}s",
            quotes.len(),
            fit.vol_rmse
        ),
    )
}

fn mle() -> Check {
    let truth = ModelParams::Nig {
        alpha: 5.0,
        beta: -1.0,
        delta: 0.02,
        mu: 0.0005,
    };
    let dt = 1.0 / 252.0;
    let n = 5000;
    let path = &simulate(
        &truth,
        &TimeGrid::uniform(n as f64 * dt, n).unwrap(),
        1,
        2024,
    )
    .unwrap()
    .paths[0];
    let returns: Vec<f64> = path.windows(2).map(|w| w[1] - w[0]).collect();
    let start = Instant::now();
    let fit = fit_returns_mle(Family::Nig, &ReturnSeries::new(returns, dt), None).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let worst = fit
        .params
        .to_vec()
        .iter()
        .zip(truth.to_vec())
        .zip(&fit.stderr)
        .map(|((g, t), s)| (g - t).abs() / s)
        .fold(0.0, f64::max);
    (
        worst <= 3.0 && secs < 60.0,
        format!("max |error|/stderr {worst:.2}, {secs:.1}s"),
    )
}

fn determinism() -> Check {
    let dir = tempfile::tempdir().unwrap();
    let quotes = common::write_nig_quotes(dir.path());
    let returns = common::write_nig_returns(dir.path(), 1500, 3);
    let nig = [
        "--model", "nig", "--alpha", "6", "--beta", "-2", "--delta", "0.4",
    ];
    let with =
        |head: &[&str]| -> Vec<String> { head.iter().chain(&nig).map(|s| s.to_string()).collect() };
    let commands: Vec<Vec<String>> = vec![
        with(&[
            "price",
            "--k",
            "100",
            "--t",
            "1",
            "--method",
            "mc",
            "--n-paths",
            "50000",
            "--seed",
            "11",
        ]),
        [
            "price",
            "--k",
            "100",
            "--t",
            "1",
            "--method",
            "mc",
            "--seed",
            "11",
            "--antithetic",
            "--model",
            "bs",
            "--sigma",
            "0.2",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect(),
        with(&["price", "--k", "95", "--t", "1", "--method", "pide"]),
        with(&[
            "simulate",
            "--t",
            "1",
            "--steps",
            "50",
            "--n-paths",
            "200",
            "--seed",
            "5",
        ]),
        with(&[
            "smile",
            "--maturities",
            "0.25,0.5,1",
            "--strikes",
            "80,90,100,110,120",
            "--r",
            "0.05",
        ]),
        with(&[
            "calibrate",
            "--r",
            "0.05",
            "--quotes",
            quotes.to_str().unwrap(),
        ]),
        [
            "fit-returns",
            "--model",
            "nig",
            "--returns",
            returns.to_str().unwrap(),
        ]
        .iter()
        .map(|s| s.to_string())
        .collect(),
    ];
    let mut differing = Vec::new();
    for args in &commands {
        let args: Vec<&str> = args.iter().map(String::as_str).collect();
        let outputs: Vec<_> = [1, 4, 8, 1]
            .iter()
            .map(|&n| {
                let o = common::run(&args, Some(n));
                assert!(o.status.success(), "{args:?}: {}", common::stderr(&o));
                o.stdout
            })
            .collect();
        if outputs.iter().any(|o| o != &outputs[0]) {
            differing.push(format!("{} {}", args[0], args[1]));
        }
    }
    (
        differing.is_empty(),
        if differing.is_empty() {
            format!(
                "{} commands byte-identical under 1, 4 and 8 threads and on rerun",
                commands.len()
            )
        } else {
            format!("output differs for {differing:?}")
        },
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Check); 10] = [
        ("cross-engine agreement", cross_engine),
        ("martingale suite", martingales),
        ("identity suite", identities),
        ("Poisson random measure statistics", poisson_measure),
        ("Esscher suite", esscher),
        ("moment suite", moments),
        ("transform internals", transform_internals),
        ("calibration round trip", calibration),
        ("MLE round trip", mle),
        ("determinism", determinism),
    ];
    // failures are reported on the criterion line
    std::panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let (ok, detail) = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
            (false, format!("panicked: {}", msg.unwrap_or_default()))
        });
        println!(
            "criterion {:>2} {}: {name}: {detail}",
            i + 1,
            if ok { "PASS" } else { "FAIL" }
        );
        failed += usize::from(!ok);
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
