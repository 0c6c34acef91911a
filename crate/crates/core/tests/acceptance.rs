//! One PASS/FAIL line per acceptance criterion; exits non-zero on any FAIL.

mod common;

use std::f64::consts::PI;
use std::process::ExitCode;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use faer::Mat;
use proptest::strategy::{Strategy, ValueTree};
use proptest::test_runner::TestRunner;

use noclick_core::ed::exact_asymmetry;
use noclick_core::gaussian::{
    correlation_from_grid, entanglement_asymmetry, log_z2, renyi_entropy, Basis, CorrelationMode,
};
use noclick_core::linalg::log_det;
use noclick_core::mpemba::{fit_decay_rate, CriterionVerdict, CrossingKind};
use noclick_core::protocol::{GaussianEngine, OracleEngine, Protocol};
use noclick_core::quasiparticle::{
    phase_rotated, saddle_asymmetry, toeplitz_asymptotic_coefficient, xy_symbol_grid, MpembaVerdict, QpKernel,
    SaddleTime,
};
use noclick_core::run::{run_crossing, run_sweep, ParamSet, ProtocolKind, RunConfig};
use noclick_core::ssh::QuenchParamsSSH;
use noclick_core::xy::QuenchParamsXY;

type Outcome = Result<(bool, String), noclick_core::Error>;

fn oracle_equivalence(protocol: Protocol) -> Outcome {
    let gauss = GaussianEngine::new(protocol, 4, CorrelationMode::FiniteL { l: 8 })?;
    let exact = OracleEngine::new(protocol, 8, 4)?;
    let (mut d_ds, mut d_s): (f64, f64) = (0.0, 0.0);
    for t in [0.0, 0.5, 1.0, 2.0] {
        let g = gauss.correlation(t)?;
        let rho = exact.rdm(t)?;
        let ds = entanglement_asymmetry(&g, 2, 128)?.value;
        d_ds = d_ds.max((ds - exact_asymmetry(&rho, 2)?).abs());
        d_s = d_s.max((renyi_entropy(&g, 2)? - rho.renyi(2)?).abs());
    }
    Ok((d_ds <= 1e-8 && d_s <= 1e-9, format!("max |dDS2| = {d_ds:.2e} (<= 1e-8), max |dS2| = {d_s:.2e} (<= 1e-9)")))
}

fn xy(kappa: f64, h: f64, gamma: f64) -> QuenchParamsXY {
    QuenchParamsXY { kappa, h, gamma }
}

fn ssh(h: f64, kappa: f64, h_ev: f64, gamma: f64) -> QuenchParamsSSH {
    QuenchParamsSSH { h, kappa, h_ev, gamma }
}

/// Late-window fits at ℓ = 60, window γt ∈ [8, 10].
fn decay_rates() -> Result<Vec<(f64, f64, f64)>, noclick_core::Error> {
    let mut out = Vec::new();
    for gamma in [0.25, 0.5] {
        let engine =
            GaussianEngine::new(Protocol::Xy(xy(0.5, 0.3, gamma)), 60, CorrelationMode::Thermodynamic { nk: 65536 })?;
        let window = (8.0 / gamma, 10.0 / gamma);
        let times: Vec<f64> = (0..=20).map(|i| window.0 + i as f64 * 0.1 / gamma).collect();
        let (mut s, mut ds) = (Vec::new(), Vec::new());
        for &t in &times {
            let r = engine.asymmetry(t, 2, 128)?;
            s.push(r.renyi);
            ds.push(r.value);
        }
        let fs = fit_decay_rate(&times, &s, window)?;
        let fa = fit_decay_rate(&times, &ds, window)?;
        out.push((gamma, fs.rate, fa.rate));
    }
    Ok(out)
}

fn criterion_3(rates: &[(f64, f64, f64)]) -> Outcome {
    let ok = rates.iter().all(|&(g, rs, _)| (rs - g).abs() <= 0.05 * g);
    let detail = rates.iter().map(|(g, rs, _)| format!("gamma={g}: rate {rs:.4} ({:+.2}%)", 100.0 * (rs / g - 1.0)));
    Ok((ok, format!("S2 decay vs gamma within 5%; {}", detail.collect::<Vec<_>>().join(", "))))
}

fn criterion_4(rates: &[(f64, f64, f64)]) -> Outcome {
    let ok = rates.iter().all(|&(g, _, ra)| (ra - 2.0 * g).abs() <= 0.1 * 2.0 * g);
    let detail =
        rates.iter().map(|(g, _, ra)| format!("gamma={g}: rate {ra:.4} ({:+.2}%)", 100.0 * (ra / (2.0 * g) - 1.0)));
    Ok((ok, format!("DS2 decay vs 2 gamma within 10%; {}", detail.collect::<Vec<_>>().join(", "))))
}

fn criterion_5() -> Outcome {
    let ells = [20usize, 40, 80, 160];
    let mut pts = Vec::new();
    for &ell in &ells {
        let e = GaussianEngine::new(Protocol::Xy(xy(0.8, 0.2, 0.0)), ell, CorrelationMode::Thermodynamic { nk: 8192 })?;
        pts.push(((ell as f64).ln(), e.asymmetry(0.0, 2, 128)?.value));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let slope = sxy / sxx;
    Ok(((slope - 0.5).abs() <= 0.05, format!("slope of DS2(0) vs log ell = {slope:.4} (0.5 +- 0.05)")))
}

fn criterion_6() -> Outcome {
    let p = ssh(0.6, 0.8, 0.4, 0.0);
    let (ell, alpha, nk) = (80usize, PI / 3.0, 4096);
    let engine = GaussianEngine::new(Protocol::Ssh(p), ell, CorrelationMode::Thermodynamic { nk })?;
    let kernel = QpKernel::new(&p, &[alpha, 0.0], nk)?;
    let z0 = log_z2(&engine.correlation(0.0)?, alpha);
    let mut worst: f64 = 0.0;
    let mut rows = Vec::new();
    for i in 1..=9 {
        let tau = i as f64 / 10.0;
        let exact = log_z2(&engine.correlation(tau * ell as f64)?, alpha) - z0;
        let pred = ell as f64 * kernel.log_ratio(tau);
        let rel = ((exact - pred) / exact).abs();
        worst = worst.max(rel);
        rows.push(format!("{tau:.1}:{:.1}%", 100.0 * rel));
    }
    Ok((worst <= 0.05, format!("max relative error {:.2}% (<= 5%); per t/ell {}", 100.0 * worst, rows.join(" "))))
}

fn criterion_7() -> Outcome {
    let p = ssh(0.6, 0.8, 0.4, 0.0);
    let (ell, nk) = (120usize, 8192);
    let pred = saddle_asymmetry(SaddleTime::TInf, &p, ell, nk)?;
    let engine = GaussianEngine::new(Protocol::Ssh(p), ell, CorrelationMode::Thermodynamic { nk })?;
    let base = 1.5 * ell as f64;
    let vals = [base, base + 0.7, base + 1.9]
        .iter()
        .map(|&t| engine.asymmetry(t, 2, 128).map(|r| r.value))
        .collect::<Result<Vec<_>, _>>()?;
    let worst = vals.iter().map(|v| ((v - pred) / pred).abs()).fold(0.0, f64::max);
    let ok = vals.iter().all(|&v| v > 0.01) && worst <= 0.10;
    Ok((
        ok,
        format!(
            "late DS2 at t = 1.5 ell + {{0, 0.7, 1.9}}: {:.5} {:.5} {:.5}; prediction {pred:.5}; max deviation {:.3}% (<= 10%, values > 0.01)",
            vals[0],
            vals[1],
            vals[2],
            100.0 * worst
        ),
    ))
}

fn criterion_8() -> Outcome {
    let base_params = ParamSet { kappa: Some(0.8), h: Some(0.6), h_ev: Some(0.0), gamma: None };
    let mut base = RunConfig::new(ProtocolKind::Ssh, base_params, 40);
    base.t_max = Some(20.0);
    let gammas = [1.0, 2.5, 4.5, 5.0];
    let grid: Vec<ParamSet> = gammas.iter().map(|&g| ParamSet { gamma: Some(g), ..Default::default() }).collect();
    let start = Instant::now();
    let sweep = run_sweep(&base, &grid)?;
    let elapsed = start.elapsed();
    let verdicts: Vec<Option<bool>> = sweep.summary.iter().map(|s| s.restored).collect();
    let expected = [Some(false), Some(false), Some(true), Some(true)];
    let tails: Vec<String> = sweep
        .records
        .iter()
        .map(|r| {
            r.as_ref()
                .and_then(|r| r.analysis.restoration.as_ref())
                .map_or("-".into(), |x| format!("{:.2e}", x.tail_mean))
        })
        .collect();
    let ok = verdicts == expected && elapsed <= Duration::from_secs(600);
    Ok((
        ok,
        format!(
            "verdicts at gamma {gammas:?}: {verdicts:?} (expect false,false,true,true); tail means {}; runtime {:.1}s (<= 600s)",
            tails.join(" "),
            elapsed.as_secs_f64()
        ),
    ))
}

fn criterion_9() -> Outcome {
    let states = [(0.9, 1.5), (0.2, 0.8), (0.6, 0.4), (-0.2, 0.3)];
    let param = |(h, kappa): (f64, f64)| ParamSet { kappa: Some(kappa), h: Some(h), h_ev: None, gamma: Some(0.5) };
    let mut checked = 0;
    let mut failures = Vec::new();
    let mut initial = Vec::new();
    for i in 0..states.len() {
        for j in i + 1..states.len() {
            let mut c = RunConfig::new(ProtocolKind::Xy, param(states[i]), 40);
            c.params_b = Some(param(states[j]));
            c.t_max = Some(12.0);
            c.dt = 0.25;
            let rec = run_crossing(&c)?;
            let x = rec.crossing.as_ref().expect("crossing block");
            if i == 0 && j == 1 {
                initial.push(rec.rows[0].ds_n);
            }
            if i == 0 {
                initial.push(rec.rows_b.as_ref().unwrap()[0].ds_n);
            }
            let predicts_crossing = match x.predicted {
                Some(MpembaVerdict::FirstSmaller) => x.report.first_starts_higher,
                Some(MpembaVerdict::SecondSmaller) => !x.report.first_starts_higher,
                _ => false,
            };
            if predicts_crossing {
                checked += 1;
                let single = x.report.kind == CrossingKind::Single;
                let ordered = x.report.criterion_verdict == Some(CriterionVerdict::Consistent);
                if !(single && ordered) {
                    failures.push(format!(
                        "{:?} vs {:?}: kind {:?}, verdict {:?}",
                        states[i], states[j], x.report.kind, x.report.criterion_verdict
                    ));
                }
            }
        }
    }
    let strictly_ordered = {
        let mut v = initial.clone();
        v.sort_by(f64::total_cmp);
        v.windows(2).all(|w| w[1] - w[0] > 1e-6)
    };
    let ok = strictly_ordered && checked > 0 && failures.is_empty();
    Ok((
        ok,
        format!(
            "DS2(0) = {:?}; {checked} of 6 pairs predict a crossing; {}",
            initial.iter().map(|v| format!("{v:.4}")).collect::<Vec<_>>(),
            if failures.is_empty() {
                "all show one crossing with the predicted late ordering".into()
            } else {
                failures.join("; ")
            }
        ),
    ))
}

fn criterion_10() -> Outcome {
    let mut runner = TestRunner::deterministic();
    let strategy = common::random_symbol();
    let (mut min_ds, mut max_sym): (f64, f64) = (f64::INFINITY, 0.0);
    for _ in 0..200 {
        let sym = strategy.new_tree(&mut runner).expect("strategy").current();
        let ds = entanglement_asymmetry(&sym.correlation(256, true), 2, 128)?.value;
        let ds0 = entanglement_asymmetry(&sym.correlation(256, false), 2, 128)?.value;
        min_ds = min_ds.min(ds);
        max_sym = max_sym.max(ds0);
    }
    Ok((
        min_ds >= -1e-9 && max_sym <= 1e-10,
        format!(
            "200 random symbols: min DS2 = {min_ds:.2e} (>= -1e-9), max DS2 without pairing = {max_sym:.2e} (<= 1e-10)"
        ),
    ))
}

fn criterion_11() -> Outcome {
    let nk = 8192;
    let grid = xy_symbol_grid(&xy(0.5, 0.3, 0.5), 1.0, nk)?;
    let rotated = phase_rotated(&grid, Basis::NambuSite.mask_block(), PI / 4.0);
    let a = toeplitz_asymptotic_coefficient(&[grid.clone(), rotated.clone()], &[false, false])?;
    let mut errs = Vec::new();
    for ell in [16usize, 32, 64, 128] {
        let g = correlation_from_grid(&grid, Basis::NambuSite, ell)?;
        let gb = correlation_from_grid(&rotated, Basis::NambuSite, ell)?;
        let prod = &g.mat * &gb.mat;
        let m = Mat::from_fn(prod.nrows(), prod.ncols(), |i, j| prod[(i, j)] + if i == j { 1.0 } else { 0.0 });
        errs.push((log_det(m.as_ref()).ln_abs / ell as f64 - a).abs());
    }
    let ok = errs.windows(2).all(|w| w[1] < w[0]);
    Ok((
        ok,
        format!(
            "|log det / ell - A| at ell 16,32,64,128: {}",
            errs.iter().map(|e| format!("{e:.3e}")).collect::<Vec<_>>().join(" ")
        ),
    ))
}

fn criterion_12() -> Outcome {
    let mut worst: f64 = 0.0;
    for protocol in [Protocol::Xy(xy(0.5, 0.3, 0.5)), Protocol::Ssh(ssh(0.6, 0.8, 0.0, 1.0))] {
        let exact = OracleEngine::new(protocol, 8, 4)?;
        for t in [0.0, 1.0] {
            let rho = exact.rdm(t)?;
            let a = rho.decohere();
            let b = rho.decohere_fourier(64);
            for i in 0..a.mat.nrows() {
                for j in 0..a.mat.ncols() {
                    worst = worst.max((a.mat[(i, j)] - b.mat[(i, j)]).norm());
                }
            }
        }
    }
    Ok((worst <= 1e-10, format!("max entry deviation projector vs 64-node decoherence = {worst:.2e} (<= 1e-10)")))
}

fn main() -> ExitCode {
    let mut failed = 0;
    let mut report = |id: u32, name: &str, f: &dyn Fn() -> Outcome| {
        let start = Instant::now();
        let (ok, detail) = match f() {
            Ok(r) => r,
            Err(e) => (false, format!("error: {e}")),
        };
        if !ok {
            failed += 1;
        }
        println!(
            "{} #{id:<2} {name}: {detail} [{:.1}s]",
            if ok { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64()
        );
    };
    report(1, "oracle equivalence, protocol 1", &|| oracle_equivalence(Protocol::Xy(xy(0.5, 0.3, 0.5))));
    report(2, "oracle equivalence, protocol 2", &|| oracle_equivalence(Protocol::Ssh(ssh(0.6, 0.8, 0.0, 1.0))));
    let rates = OnceLock::new();
    let rates = || rates.get_or_init(decay_rates).as_ref().map_err(clone_err);
    report(3, "entropy decay rate", &|| criterion_3(rates()?));
    report(4, "asymmetry decay rate", &|| criterion_4(rates()?));
    report(5, "initial-slope law", &criterion_5);
    report(6, "quasiparticle agreement", &criterion_6);
    report(7, "lack of restoration", &criterion_7);
    report(8, "restoration threshold", &criterion_8);
    report(9, "Mpemba crossing and criterion", &criterion_9);
    report(10, "faithfulness", &criterion_10);
    report(11, "Toeplitz convergence", &criterion_11);
    report(12, "Fourier decoherence identity", &criterion_12);
    println!("acceptance: {} of 12 criteria passed", 12 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn clone_err(e: &noclick_core::Error) -> noclick_core::Error {
    noclick_core::Error::Invalid(e.to_string())
}
