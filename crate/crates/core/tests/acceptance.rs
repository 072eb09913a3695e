//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails. Run with `cargo test --test acceptance`.

use std::process::ExitCode;
use std::time::Instant;

use rand::Rng;

use ssd_core::assurance::{freq_power, single_prior_assurance, two_prior_assurance, PriorSize};
use ssd_core::betabinom::{assurance_two_prop, freq_prop_power, PropDesign, TrueProportions};
use ssd_core::conjugate_lm::InverseGamma;
use ssd_core::costeff::{assurance_known, assurance_unknown, CostEffConfig};
use ssd_core::mc_engine::{scalar_model, AssuranceProblem, MCSettings};
use ssd_core::precision::{assurance_precision, freq_precision_sample_size, PrecisionConfig, PrecisionMode};
use ssd_core::sizing::{min_sample_size, ClosedForm, Grid, MonteCarlo, SizingRequest};
use ssd_core::statkit::{mix_seed, std_normal_cdf, RngStream};

/// What a criterion run reports: the verdict, a human summary and every
/// number it computed, for the determinism comparison.
struct Outcome {
    pass: bool,
    detail: String,
    values: Vec<f64>,
}

type Criterion = fn(usize) -> Outcome;

fn s(r: usize, seed: u64, workers: usize) -> MCSettings {
    MCSettings::new(r, seed).with_workers(workers)
}

fn sized_cells(workers: usize) -> Outcome {
    let cells = [(5000.0, 1048), (7000.0, 541), (10000.0, 382), (20000.0, 285)];
    let start = Instant::now();
    let mut values = Vec::new();
    let mut parts = Vec::new();
    for (i, &(k, n)) in cells.iter().enumerate() {
        let est = assurance_known(&CostEffConfig::new(k, n), &s(1000, mix_seed(101, i as u64), workers)).unwrap();
        values.push(est.delta_hat);
        parts.push(format!("K={k} n={n}: {:.3}", est.delta_hat));
    }
    let secs = start.elapsed().as_secs_f64();
    let pass = values.iter().all(|v| (0.67..=0.73).contains(v)) && secs < 120.0;
    Outcome {
        pass,
        detail: format!("{} (want [0.67, 0.73]; {secs:.1}s, limit 120s)", parts.join(", ")),
        values,
    }
}

fn curve_spots(workers: usize) -> Outcome {
    let spots = [(1, 0.473), (185, 0.655), (285, 0.697), (1200, 0.782)];
    let mut values = Vec::new();
    let mut parts = Vec::new();
    let mut pass = true;
    for (i, &(n, want)) in spots.iter().enumerate() {
        let est = assurance_known(&CostEffConfig::new(20000.0, n), &s(1000, mix_seed(202, i as u64), workers)).unwrap();
        let ok = (est.delta_hat - want).abs() <= 0.05;
        pass &= ok;
        values.push(est.delta_hat);
        parts.push(format!("n={n}: {:.3} vs {want}{}", est.delta_hat, if ok { "" } else { " (off)" }));
    }
    Outcome {
        pass,
        detail: format!("K=20000 {} (tolerance 0.05)", parts.join(", ")),
        values,
    }
}

fn oracle_equivalence(workers: usize) -> Outcome {
    let mut rng = RngStream::new(303, 0);
    let mut values = Vec::new();
    let mut hits = 0;
    let mut degenerate = 0;
    for i in 0..20u64 {
        let n = rng.random_range(10..=200usize);
        let n_a = rng.random_range(0.0..=20.0);
        let n_d = rng.random_range(5.0..=100.0);
        let delta = rng.random_range(0.0..=1.0);
        let exact = two_prior_assurance(delta, 1.0, n as f64, n_a, PriorSize::Finite(n_d), 0.05).unwrap();
        let (design, dprior, aprior, hyp) = scalar_model(delta, n, n_a, PriorSize::Finite(n_d), 0.05).unwrap();
        let est = AssuranceProblem::new(&design, &dprior, &aprior, &hyp)
            .unwrap()
            .known_var(1.0, &s(2000, mix_seed(303, i + 1), workers))
            .unwrap();
        let ok = (est.delta_hat - exact).abs() <= 3.5 * est.stderr;
        hits += ok as usize;
        degenerate += (!ok && est.stderr == 0.0) as usize;
        values.extend([est.delta_hat, exact]);
    }
    Outcome {
        pass: hits * 100 >= 95 * 20,
        detail: format!("{hits}/20 within 3.5 stderr (need 95%); {degenerate} misses have stderr 0"),
        values,
    }
}

fn frequentist_limits(_workers: usize) -> Outcome {
    let mut worst: f64 = 0.0;
    let mut values = Vec::new();
    for i in 0..100 {
        let n = 2.0 + 5.0 * i as f64;
        let delta = 0.05 + 0.01 * (i % 50) as f64;
        let a = two_prior_assurance(delta, 1.0, n, 0.0, PriorSize::Infinite, 0.05).unwrap();
        let b = freq_power(delta, 1.0, n, 0.05).unwrap();
        worst = worst.max((a - b).abs());
        values.push(a);
    }
    let mut limit_err: f64 = 0.0;
    for &(delta, n) in &[(0.3, 20.0), (-0.3, 20.0), (0.05, 500.0), (-1.0, 3.0)] {
        let tiny = single_prior_assurance(delta, 1.0, n, 1e-12, 0.05).unwrap();
        let huge = single_prior_assurance(delta, 1.0, n, 1e12, 0.05).unwrap();
        let want = if delta > 0.0 { 1.0 } else { 0.0 };
        limit_err = limit_err.max((tiny - 0.5).abs()).max((huge - want).abs());
        values.extend([tiny, huge]);
    }
    Outcome {
        pass: worst <= 1e-12 && limit_err <= 1e-3,
        detail: format!("max |two-prior - power| = {worst:.1e} (<= 1e-12); max limit error = {limit_err:.1e} (<= 1e-3)"),
        values,
    }
}

fn unknown_variance(workers: usize) -> Outcome {
    let ig = InverseGamma::concentrated(ssd_core::costeff::DEFAULT_SIGMA2, 1e6).unwrap();
    let known_cfg = CostEffConfig::new(10000.0, 382);
    let cfg = CostEffConfig {
        design_ig: Some(ig),
        analysis_ig: Some(ig),
        ..known_cfg.clone()
    };
    let settings = s(500, 505, workers).with_inner_samples(500);
    let known = assurance_known(&known_cfg, &settings).unwrap().delta_hat;
    let unknown = assurance_unknown(&cfg, &settings).unwrap().delta_hat;
    Outcome {
        pass: (known - unknown).abs() <= 0.02,
        detail: format!("known {known:.3}, unknown {unknown:.3} (tolerance 0.02)"),
        values: vec![known, unknown],
    }
}

fn precision_indicator(workers: usize) -> Outcome {
    let (sigma, d, alpha) = (2.0f64, 0.5, 0.05);
    let step = freq_precision_sample_size(d, sigma, alpha).unwrap();
    let base = PrecisionConfig {
        n: 1,
        d,
        theta0_a: 0.0,
        theta0_d: 0.3,
        n_a: 0.0,
        n_d: PriorSize::Finite(10.0),
        sigma2: sigma * sigma,
        alpha,
    };
    let mut values = Vec::new();
    let mut mismatches = 0;
    let mut first = None;
    for n in 40..90usize {
        let est = assurance_precision(&base.with_n(n), PrecisionMode::SampleMean, &s(500, 606, workers)).unwrap();
        let indicator = if 2.0 * std_normal_cdf((n as f64).sqrt() * d / sigma).unwrap() - 1.0 >= 1.0 - alpha { 1.0 } else { 0.0 };
        mismatches += (est.delta_hat != indicator) as usize;
        if est.delta_hat == 1.0 && first.is_none() {
            first = Some(n);
        }
        values.push(est.delta_hat);
    }
    Outcome {
        pass: mismatches == 0 && first == Some(step) && step == 62,
        detail: format!("{mismatches} mismatches on 50 points; step at {first:?}, predicted {step} (want 62)"),
        values,
    }
}

fn two_proportions(workers: usize) -> Outcome {
    let mut worst: f64 = 0.0;
    let mut values = Vec::new();
    let mut parts = Vec::new();
    for (i, &p1) in [0.2, 0.25].iter().enumerate() {
        for (j, &n) in [50u64, 100, 200].iter().enumerate() {
            let d = PropDesign::balanced(n, 50.0, 50.0, TrueProportions::Exact { p1, p2: 0.5 }, 0.05);
            let est = assurance_two_prop(&d, &s(5000, mix_seed(707, (i * 3 + j) as u64), workers)).unwrap();
            let power = freq_prop_power(p1, 0.5, n as f64, 0.05).unwrap();
            worst = worst.max((est.delta_hat - power).abs());
            values.push(est.delta_hat);
            parts.push(format!("p1={p1} n={n}: {:.3} vs {power:.3}", est.delta_hat));
        }
    }
    Outcome {
        pass: worst <= 0.05,
        detail: format!("max |diff| = {worst:.3} (tolerance 0.05); {}", parts.join(", ")),
        values,
    }
}

fn sizing(workers: usize) -> Outcome {
    let freq = ClosedForm::new("closed-form", |n| freq_power(0.4, 1.0, n as f64, 0.05));
    let req = SizingRequest::new(0.75, Grid::Range { min: 1, max: 100, step: 10 }, 1, 0).with_workers(workers);
    let n_freq = min_sample_size(&freq, &req).unwrap().n_star.value();
    let mut values = vec![n_freq.map_or(-1.0, |n| n as f64)];
    let ce = MonteCarlo::new("mc-known-var", |n, st: &MCSettings| assurance_known(&CostEffConfig::new(7000.0, n), st));
    let mut stars = Vec::new();
    for seed in 1..=5u64 {
        let req = SizingRequest::new(0.70, Grid::Range { min: 100, max: 1500, step: 100 }, 30_000, seed)
            .with_workers(workers);
        let r = min_sample_size(&ce, &req).unwrap();
        values.extend(r.curve.iter().chain(&r.refinement).map(|p| p.assurance));
        stars.push(r.n_star.value());
    }
    values.extend(stars.iter().map(|s| s.map_or(-1.0, |n| n as f64)));
    let in_range = stars.iter().all(|s| matches!(s, Some(n) if (490..=600).contains(n)));
    Outcome {
        pass: n_freq == Some(34) && in_range,
        detail: format!("frequentist n* = {n_freq:?} (want 34); K=7000 n* over seeds 1..5 = {stars:?} (want [490, 600])"),
        values,
    }
}

fn main() -> ExitCode {
    let criteria: [(&str, Criterion); 8] = [
        ("cost-effectiveness assurance at the sized n, R = 1000", sized_cells),
        ("cost-effectiveness curve spot checks, K = 20000, R = 1000", curve_spots),
        ("closed form vs simulation on 20 random scalar configs", oracle_equivalence),
        ("frequentist limits of the closed forms", frequentist_limits),
        ("unknown vs known variance with concentrated IG priors", unknown_variance),
        ("precision assurance equals the deterministic indicator", precision_indicator),
        ("two proportions with Beta(50, 50) priors vs frequentist power", two_proportions),
        ("minimum sample size search", sizing),
    ];
    let mut failed = 0;
    let mut baseline = Vec::new();
    for (i, (name, run)) in criteria.iter().enumerate() {
        let out = run(1);
        failed += !out.pass as usize;
        println!("{} {}. {name}: {}", if out.pass { "PASS" } else { "FAIL" }, i + 1, out.detail);
        baseline.push(out.values);
    }
    let mut diverged = Vec::new();
    for workers in [2, 8] {
        for (i, (_, run)) in criteria.iter().enumerate() {
            let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
            if bits(&run(workers).values) != bits(&baseline[i]) {
                diverged.push(format!("{} at {workers} workers", i + 1));
            }
        }
    }
    let pass9 = diverged.is_empty();
    failed += !pass9 as usize;
    println!(
        "{} 9. bit-identical reruns at 1, 2 and 8 workers: {}",
        if pass9 { "PASS" } else { "FAIL" },
        if pass9 { "all criteria identical".to_string() } else { format!("differs for {}", diverged.join(", ")) }
    );
    println!("{failed} of 9 criteria failed");
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
