//! Acceptance run: one PASS/FAIL line per criterion, non-zero exit if any fails.

use std::f64::consts::TAU;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use circmode::calibration::{build_calibration, CalibrationDensity, CalibrationOptions};
use circmode::excess_mass::{brute_force_delta, delta_statistic};
use circmode::models::{model_sample, named_model, ModelId};
use circmode::pipeline::{run_pipeline, PipelineConfig};
use circmode::rng::{derive_seed, stream_rng};
use circmode::spatial::{
    build_patches, conditional_pvalue, hierarchical_test, Cell, ConditionalParams, HierarchicalOptions, LabelGrid,
};
use circmode::special::norm_sf;
use circmode::study::{run_study, StudyConfig, StudyRow};
use circmode::testing::{excess_mass_test, Method};
use circmode::CircularSample;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn criterion_1() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let n = rng.random_range(4..=12);
        let x = CircularSample::new((0..n).map(|_| rng.random_range(0.0..TAU))).unwrap();
        for k in 1..=2 {
            let fast = delta_statistic(&x, k).unwrap().delta;
            let slow = brute_force_delta(&x, k).unwrap().delta;
            worst = worst.max((fast - slow).abs());
        }
    }
    outcome(worst <= 1e-12, format!("max |Δ − Δ_brute| = {worst:.2e} over 400 cases"))
}

/// Returns a description of the first violated invariant.
fn calibration_violation(g: &CalibrationDensity, k: usize) -> Option<String> {
    for i in 0..4096 {
        let t = TAU * i as f64 / 4096.0;
        if !(g.eval(t) > 0.0) {
            return Some(format!("g({t:.4}) = {:e}", g.eval(t)));
        }
    }
    for &x in &g.knots() {
        let e = 1e-9;
        let l = g.raw(x - e) + e * g.raw_derivative(x - e);
        let r = g.raw(x + e) - e * g.raw_derivative(x + e);
        if (l - r).abs() > 1e-6 * l.abs().max(1e-12) + 1e-12 {
            return Some(format!("g jumps at {x:.4}: {l:e} vs {r:e}"));
        }
        let dl = 2.0 * g.raw_derivative(x - e) - g.raw_derivative(x - 2.0 * e);
        let dr = 2.0 * g.raw_derivative(x + e) - g.raw_derivative(x + 2.0 * e);
        if (dl - dr).abs() > 1e-6 * dl.abs().max(dr.abs()).max(1e-6) + 1e-7 {
            return Some(format!("g' jumps at {x:.4}: {dl:e} vs {dr:e}"));
        }
    }
    let tp = g.find_turning_points(1 << 14).unwrap();
    if tp.modes.len() != k {
        return Some(format!("{} modes, expected {k}", tp.modes.len()));
    }
    for nb in g.neighborhoods() {
        let t = nb.theta;
        let h = 1e-3 * nb.bump.eta / nb.bump.exponent().max(1.0).sqrt();
        let fd2 = (g.raw_derivative(t + h) - g.raw_derivative(t - h)) / (2.0 * h);
        let ratio = fd2.abs() / g.raw(t).powi(3);
        if (ratio - nb.d_hat).abs() > 1e-4 * nb.d_hat {
            return Some(format!("curvature ratio {ratio:e} vs d̂ {:e} at {t:.4}", nb.d_hat));
        }
    }
    None
}

fn criterion_2() -> Outcome {
    let opts = CalibrationOptions::default();
    let mut failures = Vec::new();
    let mut checked = 0;
    for s in 0..50u64 {
        let model = named_model(if s % 2 == 0 { 1 } else { 11 }).unwrap();
        let x = model_sample(&model, 200, &mut stream_rng(derive_seed(2, &[s]), 0)).unwrap();
        for k in 1..=2 {
            checked += 1;
            match build_calibration(&x, k, &opts) {
                Ok(g) => {
                    if let Some(v) = calibration_violation(&g, k) {
                        failures.push(format!("sample {s} k={k}: {v}"));
                    }
                }
                Err(e) => failures.push(format!("sample {s} k={k}: {e}")),
            }
        }
    }
    let mut detail = format!("{} of {checked} densities satisfy every invariant", checked - failures.len());
    for f in failures.iter().take(5) {
        detail.push_str(&format!("\n    {f}"));
    }
    outcome(failures.is_empty(), detail)
}

fn study(models: &[usize], k: usize, method: Method, alphas: &[f64], seed: u64) -> Vec<StudyRow> {
    let cfg = StudyConfig {
        models: models.iter().map(|&m| ModelId(m)).collect(),
        k,
        n: vec![200],
        reps: 200,
        b: 200,
        alphas: alphas.to_vec(),
        methods: vec![method],
        seed,
        workers: None,
    };
    run_study(&cfg).unwrap().rows
}

fn failed_note(row: &StudyRow) -> String {
    if row.failed > 0 {
        format!(" [{} failed reps]", row.failed)
    } else {
        String::new()
    }
}

fn criterion_3_4(rows: &[StudyRow]) -> (Outcome, Outcome) {
    // n = 200, excess mass: rate and SD at α = 0.01, 0.05, 0.10
    let reference = [
        (1, [(0.004, 0.006), (0.034, 0.016), (0.074, 0.023)]),
        (2, [(0.008, 0.008), (0.038, 0.017), (0.092, 0.025)]),
    ];
    let mut pass = true;
    let mut detail = Vec::new();
    for (model, cells) in reference {
        let row = rows.iter().find(|r| r.model == ModelId(model)).unwrap();
        for (cell, (paper, sd)) in row.rates.iter().zip(cells) {
            let done = (row.reps - row.failed) as f64;
            let se = (cell.rate * (1.0 - cell.rate) / done).sqrt();
            let band = 1.96 * sd + 1.96 * se;
            let ok = (cell.rate - paper).abs() <= band;
            pass &= ok;
            detail.push(format!(
                "M{model} α={:.2}: {:.3} vs {paper:.3}±{band:.3}{}{}",
                cell.alpha,
                cell.rate,
                if ok { "" } else { " OUT" },
                failed_note(row)
            ));
        }
    }
    let m3 = rows.iter().find(|r| r.model == ModelId(3)).unwrap();
    let rate = m3.rates[1].rate;
    (
        outcome(pass, detail.join("; ")),
        outcome(rate <= 0.05, format!("M3 α=0.05 rate {rate:.3} (≤ 0.05){}", failed_note(m3))),
    )
}

fn criterion_5() -> Outcome {
    let rows = study(&[3], 1, Method::WatsonU2, &[0.05], 5);
    let rate = rows[0].rates[0].rate;
    outcome(rate > 0.5, format!("M3 Watson U² α=0.05 rate {rate:.3} (> 0.5){}", failed_note(&rows[0])))
}

fn criterion_6() -> Outcome {
    let m11 = study(&[11], 1, Method::ExcessMass, &[0.05], 6);
    let m21 = study(&[21], 2, Method::ExcessMass, &[0.05], 6);
    let (a, b) = (m11[0].rates[0].rate, m21[0].rates[0].rate);
    outcome(
        a >= 0.98 && b >= 0.98,
        format!("M11 k=1 {a:.3}{}, M21 k=2 {b:.3}{} (≥ 0.98)", failed_note(&m11[0]), failed_note(&m21[0])),
    )
}

const SIDE: i64 = 20;
const PLANTED: std::ops::Range<i64> = 7..12;

fn cell_pvalue(seed: u64, r: i64, c: i64, model: usize) -> f64 {
    let data_seed = derive_seed(seed, &[r as u64, c as u64, model as u64]);
    let x = model_sample(&named_model(model).unwrap(), 200, &mut stream_rng(data_seed, 0)).unwrap();
    excess_mass_test(&x, 1, 200, derive_seed(data_seed, &[1])).unwrap().pvalue
}

fn is_planted(r: i64, c: i64) -> bool {
    PLANTED.contains(&r) && PLANTED.contains(&c)
}

/// Horizontal land-cover bands of five rows, optionally with the planted
/// block carrying its own label.
fn labels(planted: bool) -> LabelGrid {
    let mut grid = LabelGrid::new();
    for r in 0..SIDE {
        for c in 0..SIDE {
            let label = if planted && is_planted(r, c) {
                "cropland"
            } else if (r / 5) % 2 == 0 {
                "forest"
            } else {
                "grassland"
            };
            grid.insert((r, c), label);
        }
    }
    grid
}

fn cells(pvalues: &[f64]) -> Vec<Cell> {
    (0..SIDE * SIDE)
        .map(|i| {
            let (r, c) = (i / SIDE, i % SIDE);
            Cell {
                id: i as usize,
                row: r,
                col: c,
                centroid: (40.0 + 0.5 * r as f64 + 0.25, 0.5 * c as f64 + 0.25),
                n: 200,
                pvalue: pvalues[i as usize],
            }
        })
        .collect()
}

fn mean_se(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

fn criterion_7_8() -> (Outcome, Outcome) {
    let opts = |seed: u64| HierarchicalOptions { alpha_c: 0.05, alpha_r: 0.05, b: 200, seed: derive_seed(seed, &[7]) };
    let null_patches = build_patches(&labels(false));
    let planted_patches = build_patches(&labels(true));
    let mut false_fraction = Vec::new();
    let mut detected = 0;
    let mut planted_share = Vec::new();
    for seed in 0..20u64 {
        let base = derive_seed(78, &[seed]);
        let mut p: Vec<f64> = (0..SIDE * SIDE)
            .into_par_iter()
            .map(|i| cell_pvalue(base, i / SIDE, i % SIDE, 1))
            .collect();
        let null = hierarchical_test(&cells(&p), &null_patches, &opts(base)).unwrap();
        false_fraction.push(null.rejected_cells.len() as f64 / p.len() as f64);

        let hot: Vec<(i64, i64)> = PLANTED.flat_map(|r| PLANTED.map(move |c| (r, c))).collect();
        let planted_p: Vec<f64> = hot.par_iter().map(|&(r, c)| cell_pvalue(base, r, c, 11)).collect();
        for (&(r, c), q) in hot.iter().zip(planted_p) {
            p[(r * SIDE + c) as usize] = q;
        }
        let out = hierarchical_test(&cells(&p), &planted_patches, &opts(base)).unwrap();
        if out.patches.iter().any(|pt| pt.label == "cropland" && pt.rejected) {
            detected += 1;
        }
        let hits = out.rejected_cells.iter().filter(|&&i| is_planted(i as i64 / SIDE, i as i64 % SIDE)).count();
        planted_share.push(hits as f64 / hot.len() as f64);
    }
    let (mean, se) = mean_se(&false_fraction);
    let bound = 0.05 + 3.0 * se;
    let (share, _) = mean_se(&planted_share);
    (
        outcome(mean <= bound, format!("mean false fraction {mean:.4} (≤ {bound:.4}, SE {se:.4}) over 20 seeds")),
        outcome(
            detected >= 19 && share >= 0.8,
            format!("planted patch detected in {detected}/20 seeds (≥ 19); mean share of planted cells rejected {share:.3} (≥ 0.80)"),
        ),
    )
}

fn criterion_9() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut points = vec![(1.3, 0.0, ConditionalParams { cutoff: 0.05, null_share: 1.0, mu: 2.0 })];
    points.push((2.0, 1.0, ConditionalParams { cutoff: 0.1, null_share: 0.6, mu: 1.5 }));
    while points.len() < 25 {
        let z = rng.random_range(-1.0..3.0);
        let rho = rng.random_range(0.0..0.95);
        let cutoff = rng.random_range(0.02..0.3);
        let null_share = rng.random_range(0.3..1.0);
        let mu = rng.random_range(0.0..3.0);
        points.push((z, rho, ConditionalParams { cutoff, null_share, mu }));
    }
    let draws = 4_000_000;
    let mut worst = 0.0f64;
    let mut failures = Vec::new();
    for (i, (z, rho, params)) in points.iter().enumerate() {
        let exact = conditional_pvalue(*z, *rho, params).unwrap();
        let q = circmode::special::norm_isf(params.cutoff);
        let s = (1.0 - rho * rho).sqrt();
        let mut mc = stream_rng(9, i as u64);
        let (mut selected, mut hits) = (0u64, 0u64);
        for _ in 0..draws {
            let u: f64 = mc.sample(StandardNormal);
            let w: f64 = mc.sample(StandardNormal);
            let shift = if mc.random::<f64>() < params.null_share { 0.0 } else { params.mu };
            if rho * u + s * w + shift > q {
                selected += 1;
                hits += (u >= *z) as u64;
            }
        }
        let p = hits as f64 / selected as f64;
        let se = (p * (1.0 - p) / selected as f64).sqrt().max(1.0 / selected as f64);
        let dev = (exact - p).abs() / se;
        worst = worst.max(dev);
        if dev > 3.0 {
            failures.push(format!("point {i}: quadrature {exact:.5} vs MC {p:.5} ({dev:.1} SE)"));
        }
    }
    let mut reduction = 0.0f64;
    let plain = ConditionalParams { cutoff: 0.05, null_share: 1.0, mu: 2.0 };
    for j in 0..=40 {
        let z = -3.0 + 0.2 * j as f64;
        reduction = reduction.max((conditional_pvalue(z, 0.0, &plain).unwrap() - norm_sf(z)).abs());
    }
    let pass = failures.is_empty() && reduction <= 1e-6;
    let mut detail = format!("max deviation {worst:.2} SE at 25 points; ρ=0 reduction error {reduction:.1e}");
    for f in &failures {
        detail.push_str(&format!("\n    {f}"));
    }
    outcome(pass, detail)
}

fn criterion_10() -> Outcome {
    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/pipeline/pipeline.toml");
    let base = PipelineConfig::from_file(&path).unwrap();
    let tmp = tempfile::tempdir().unwrap();
    let run = |name: &str, workers: usize| {
        let cfg = PipelineConfig { output: tmp.path().join(name), workers: Some(workers), ..base.clone() };
        run_pipeline(&cfg).unwrap();
        std::fs::read(cfg.output.join("cells.csv")).unwrap()
    };
    let a = run("a", 1);
    let b = run("b", 1);
    let c = run("c", 3);
    outcome(
        a == b && a == c && !a.is_empty(),
        format!("cells.csv ({} bytes) identical across two 1-worker runs and a 3-worker run: {}", a.len(), a == b && a == c),
    )
}

fn report(n: usize, o: &Outcome, started: Instant) {
    println!(
        "criterion {n:>2} {} ({:.0} s): {}",
        if o.pass { "PASS" } else { "FAIL" },
        started.elapsed().as_secs_f64(),
        o.detail
    );
}

/// `CIRCMODE_ACCEPTANCE=2,9` runs a subset; by default every criterion runs.
fn selected() -> impl Fn(usize) -> bool {
    let only: Option<Vec<usize>> = std::env::var("CIRCMODE_ACCEPTANCE")
        .ok()
        .map(|v| v.split(',').filter_map(|s| s.trim().parse().ok()).collect());
    move |n| only.as_ref().is_none_or(|o| o.contains(&n))
}

fn main() {
    // harness flags passed by cargo are ignored
    let want = selected();
    let mut passed = Vec::new();
    let single: [(usize, fn() -> Outcome); 6] =
        [(1, criterion_1), (2, criterion_2), (9, criterion_9), (10, criterion_10), (5, criterion_5), (6, criterion_6)];
    for (n, f) in single.into_iter().filter(|(n, _)| want(*n)) {
        let t = Instant::now();
        let o = f();
        report(n, &o, t);
        passed.push(o.pass);
    }

    if want(3) || want(4) {
        let t = Instant::now();
        let rows = study(&[1, 2, 3], 1, Method::ExcessMass, &[0.01, 0.05, 0.10], 3);
        let (c3, c4) = criterion_3_4(&rows);
        report(3, &c3, t);
        report(4, &c4, t);
        passed.extend([c3.pass, c4.pass]);
    }

    if want(7) || want(8) {
        let t = Instant::now();
        let (c7, c8) = criterion_7_8();
        report(7, &c7, t);
        report(8, &c8, t);
        passed.extend([c7.pass, c8.pass]);
    }

    if passed.contains(&false) {
        println!("acceptance: at least one criterion failed");
        std::process::exit(1);
    }
    println!("acceptance: all criteria passed");
}
