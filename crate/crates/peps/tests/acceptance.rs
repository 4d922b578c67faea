//! Acceptance criteria, one `PASS`/`FAIL` line each.
//!
//! Runs as a plain binary so every line is printed even when a criterion
//! fails. The process exits non-zero if any criterion fails.

use std::time::{Duration, Instant};

use peps::commands::{evaluate_parallel, fit};
use peps::config::ExperimentConfig;
use peps::io::{load_checkpoint, save_checkpoint};
use peps_core::aggregators::{pink_aggregate, pink_dims, AggregatorKind, PinkAllocation};
use peps_core::encoders::{Boundary, Encoder, EncoderSpec, FeatureGrid, HashGrid, HashIndexing};
use peps_core::metrics::{iou_of_signs, lpsd, lsd, psd_slope, psnr, radial_psd, ssim};
use peps_core::model::{
    loss_node, train_with, LossKind, Model, ModelCheckpoint, ModelSpec, Schedule, TrainConfig,
};
use peps_core::numerics::{ParamId, ParamStore, Tape};
use peps_core::projection::{ape, lissajous_distinct, FrequencySchedule, LISSAJOUS_PHI_MAX, LISSAJOUS_SAMPLES};
use peps_core::signals::procedural::{brownian_field, dead_leaves, white_noise};
use peps_core::signals::{Image, Signal};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = (bool, String);

fn report(n: u32, name: &str, budget: Duration, took: Duration, (ok, detail): Check) -> bool {
    let in_time = took <= budget;
    let pass = ok && in_time;
    let late = if in_time { "" } else { ", over budget" };
    println!(
        "criterion {n:>2} {} {name}: {detail} ({:.1}s of {}s{late})",
        if pass { "PASS" } else { "FAIL" },
        took.as_secs_f64(),
        budget.as_secs()
    );
    pass
}

fn criterion(n: u32, name: &str, budget: Duration, f: impl FnOnce() -> Check) -> bool {
    let t = Instant::now();
    let check = f();
    report(n, name, budget, t.elapsed(), check)
}

fn secs(s: u64) -> Duration {
    Duration::from_secs(s)
}

fn pink_by_slicing(d: usize, l: usize, alpha: f64) -> usize {
    let sched = FrequencySchedule::power_of_two(l);
    let alloc = PinkAllocation::new(d, &sched, alpha).unwrap();
    let lat: Vec<f64> = (0..d).map(|c| c as f64).collect();
    let refs: Vec<&[f64]> = vec![&lat; l];
    pink_aggregate(&lat, &refs, &refs, &alloc).unwrap().len()
}

fn c1_pink_dims() -> Check {
    let s = FrequencySchedule::power_of_two(3);
    let (a1, a0) = (pink_dims(8, &s, 1.0), pink_dims(8, &s, 0.0));
    let mut mismatches = 0;
    let mut cases = 0;
    for d in 1..=64 {
        for l in 0..=6 {
            for alpha in [0.0, 0.5, 1.0, 1.5, 2.0, 3.0] {
                cases += 1;
                if pink_dims(d, &FrequencySchedule::power_of_two(l), alpha) != pink_by_slicing(d, l, alpha) {
                    mismatches += 1;
                }
            }
        }
    }
    (
        a1 == 22 && a0 == 56 && mismatches == 0,
        format!("d=8 L=3: alpha 1 -> {a1}, alpha 0 -> {a0}; {mismatches} oracle mismatches in {cases} cases"),
    )
}

fn c2_concat_law() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut bad = 0;
    for _ in 0..200 {
        let dims = rng.gen_range(1..=3);
        let res = rng.gen_range(2..7);
        let k = rng.gen_range(1..9);
        let l = rng.gen_range(0..6);
        let spec = EncoderSpec::peps(EncoderSpec::grid(&vec![res; dims], k), l, AggregatorKind::Concat);
        let mut store = ParamStore::new();
        let enc = spec.build(&mut store, &mut rng).unwrap();
        let x: Vec<f64> = (0..dims).map(|_| rng.gen()).collect();
        if enc.encode(&store, &x).unwrap().len() != (2 * l + 1) * k {
            bad += 1;
        }
    }
    (bad == 0, format!("{bad} of 200 configurations off the (2L+1)d law"))
}

fn batch_loss(model: &Model, coords: &[f64], gt: &[f64]) -> f64 {
    let mut tape = Tape::new();
    let pred = model.forward(&mut tape, coords, coords.len() / 2).unwrap();
    let l = loss_node(&mut tape, LossKind::L1, pred, gt).unwrap();
    tape.value(l)[0]
}

fn c3_gradients() -> Check {
    let enc = EncoderSpec::peps(EncoderSpec::grid(&[20, 20], 8), 3, AggregatorKind::Pink { alpha: 1.0 });
    let mut spec = ModelSpec::new(enc, 3).unwrap();
    spec.mlp.hidden_layers = 2;
    spec.mlp.hidden_width = 32;
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let mut model = Model::new(spec, &mut rng).unwrap();
    for p in model.store_mut().iter_mut() {
        p.values_mut().iter_mut().for_each(|v| *v = rng.gen_range(-0.5..0.5));
    }
    let coords: Vec<f64> = (0..24).map(|_| rng.gen()).collect();
    let gt: Vec<f64> = (0..36).map(|_| rng.gen()).collect();
    let mut tape = Tape::new();
    let pred = model.forward(&mut tape, &coords, 12).unwrap();
    let l = loss_node(&mut tape, LossKind::L1, pred, &gt).unwrap();
    model.store_mut().zero_grad();
    tape.backward(l, model.store_mut()).unwrap();
    let ids: Vec<ParamId> = model.store().iter().map(|(id, _)| id).collect();
    let h = 1e-5;
    let mut worst = 0.0f64;
    for id in ids {
        for j in 0..model.store().get(id).len() {
            let analytic = model.store().get(id).grad()[j];
            let v = model.store().get(id).values()[j];
            model.store_mut().get_mut(id).values_mut()[j] = v + h;
            let up = batch_loss(&model, &coords, &gt);
            model.store_mut().get_mut(id).values_mut()[j] = v - h;
            let down = batch_loss(&model, &coords, &gt);
            model.store_mut().get_mut(id).values_mut()[j] = v;
            let numeric = (up - down) / (2.0 * h);
            worst = worst.max((analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-6));
        }
    }
    (
        worst < 1e-4,
        format!("{} parameters, max relative error {worst:.2e} (< 1e-4)", model.param_count()),
    )
}

struct ImageRun {
    psnr: f64,
    params: usize,
}

fn fit_image(signal: &Signal, encoder: EncoderSpec, seed: u64) -> ImageRun {
    let spec = ModelSpec::new(encoder, 3).unwrap();
    let mut model = Model::new(spec, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
    let cfg = TrainConfig {
        loss: LossKind::L1,
        base_lr: 0.01,
        schedule: Schedule::Cosine { min_factor: 0.01 },
        batch_size: 1024,
        epochs: 1,
        batches_per_epoch: 1500,
        seed,
        ..TrainConfig::default()
    };
    let log = train_with(&mut model, signal, &cfg, &mut |_| {}, &evaluate_parallel).unwrap();
    ImageRun {
        psnr: log.final_report.get("psnr").unwrap(),
        params: model.param_count(),
    }
}

const DIMS: [usize; 3] = [8, 16, 32];
const SEEDS: u64 = 5;

/// `[seed][method][dim]` with methods grid, concat PEPS, pink PEPS.
fn image_sweep() -> Vec<[[ImageRun; 3]; 3]> {
    let signal = Signal::image(dead_leaves(256, 1).unwrap()).unwrap();
    (0..SEEDS)
        .map(|seed| {
            let run = |agg: Option<AggregatorKind>, d: usize| {
                let grid = EncoderSpec::grid(&[16, 16], d);
                let enc = match agg {
                    Some(a) => EncoderSpec::peps(grid, 3, a),
                    None => grid,
                };
                fit_image(&signal, enc, seed)
            };
            let method = |agg: Option<AggregatorKind>| DIMS.map(|d| run(agg, d));
            [
                method(None),
                method(Some(AggregatorKind::Concat)),
                method(Some(AggregatorKind::Pink { alpha: 1.0 })),
            ]
        })
        .collect()
}

fn c4_sweep_direction(runs: &[[[ImageRun; 3]; 3]]) -> Check {
    let mut wins = 0;
    let mut lines = Vec::new();
    for [grid, peps, _] in runs {
        let grid_gain = grid[2].psnr - grid[0].psnr;
        let peps_gain = peps[2].psnr - peps[0].psnr;
        // peps at d=8 against the grid at d=32, which has more parameters
        let matched = peps[0].params <= grid[2].params;
        let margin = peps[0].psnr - grid[2].psnr;
        if peps_gain > grid_gain && matched && margin >= 0.5 {
            wins += 1;
        }
        lines.push(format!("gain {grid_gain:.2}/{peps_gain:.2} margin {margin:.2}"));
    }
    let p = &runs[0];
    (
        wins >= 4,
        format!(
            "{wins}/5 seeds (grid/PEPS gain d=8->32, PEPS d=8 ({} params) minus grid d=32 ({} params) in dB): {}",
            p[1][0].params,
            p[0][2].params,
            lines.join("; ")
        ),
    )
}

fn c5_pink_parity(runs: &[[[ImageRun; 3]; 3]]) -> Check {
    let mut ok = true;
    let mut lines = Vec::new();
    let sched = FrequencySchedule::power_of_two(3);
    for (i, d) in DIMS.iter().enumerate() {
        let mean = |m: usize| runs.iter().map(|r| r[m][i].psnr).sum::<f64>() / runs.len() as f64;
        let (peps, pink) = (mean(1), mean(2));
        let smaller = pink_dims(*d, &sched, 1.0) < 7 * d;
        ok &= smaller && pink >= peps - 0.5;
        lines.push(format!(
            "d={d}: pink {pink:.2} dB ({} features) vs concat {peps:.2} dB ({} features)",
            pink_dims(*d, &sched, 1.0),
            7 * d
        ));
    }
    (ok, format!("within 0.5 dB: {}", lines.join("; ")))
}

fn c6_sdf() -> Check {
    let iou = |preset: &str| {
        let cfg = ExperimentConfig::load(preset).unwrap();
        let signal = cfg.load_signal().unwrap();
        fit(&cfg, &signal, &mut |_| {}).unwrap().1.final_report.get("iou").unwrap()
    };
    let ti = iou("preset:sdf-grid-desk");
    let peps = iou("preset:sdf-grid-peps-desk");
    (
        peps >= ti && ti >= 0.9 && peps >= 0.9,
        format!("torus 64^3, MAPE, 2k steps: Grid-PEPS IoU {peps:.4} vs TI grid {ti:.4} (need PEPS >= TI, both >= 0.90)"),
    )
}

fn c7_lissajous() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let lattice = |rng: &mut ChaCha8Rng| [rng.gen_range(1..64) as f64 / 64.0, rng.gen_range(1..64) as f64 / 64.0];
    let mut pairs = Vec::new();
    while pairs.len() < 150 {
        let (p, q) = (lattice(&mut rng), lattice(&mut rng));
        if p != q {
            pairs.push((p, q));
        }
    }
    for _ in 0..50 {
        let p = lattice(&mut rng);
        let s = rng.gen_range(2..5) as f64;
        pairs.push((p, [p[0] * s, p[1] * s]));
    }
    let same = pairs
        .iter()
        .filter(|(p, q)| !lissajous_distinct(*p, *q, LISSAJOUS_PHI_MAX, LISSAJOUS_SAMPLES).unwrap())
        .count();
    (same == 0, format!("{} pairs (50 equal-ratio), {same} reported identical", pairs.len()))
}

fn c8_rotation() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let sched = FrequencySchedule::power_of_two(8);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let x: f64 = rng.gen_range(-10.0..10.0);
        let k: f64 = rng.gen_range(-10.0..10.0);
        let i = rng.gen_range(0..8);
        let phi = sched.phi()[i];
        let a = ape(&[x], &sched).unwrap();
        let b = ape(&[x + k], &sched).unwrap();
        let (s, c) = (a[2 * i], a[2 * i + 1]);
        let (rs, rc) = ((k * phi).sin(), (k * phi).cos());
        worst = worst.max((b[2 * i] - (s * rc + c * rs)).abs());
        worst = worst.max((b[2 * i + 1] - (c * rc - s * rs)).abs());
    }
    (worst < 1e-9, format!("1000 draws, max deviation {worst:.2e} (< 1e-9)"))
}

fn c9_spectra() -> Check {
    let alpha = |img: Image| psd_slope(&radial_psd(&img), None).unwrap();
    let natural = alpha(dead_leaves(256, 1).unwrap());
    let noise = alpha(white_noise(256, 1).unwrap());
    let brown = alpha(brownian_field(256, 1).unwrap());
    let ok = (0.8..=2.2).contains(&natural) && noise.abs() < 0.2 && (1.6..=2.4).contains(&brown);
    (
        ok,
        format!(
            "dead leaves {natural:.3} in [0.8, 2.2], white noise {noise:.3} in (-0.2, 0.2), Brownian sheet {brown:.3} in [1.6, 2.4]"
        ),
    )
}

fn c10_metrics() -> Check {
    let a = white_noise(32, 3).unwrap();
    let b = white_noise(32, 4).unwrap();
    let mut fails = Vec::new();
    let mut check = |ok: bool, what: &str| {
        if !ok {
            fails.push(what.to_string());
        }
    };
    check(psnr(&a, &a, 1.0).unwrap() == f64::INFINITY, "psnr identity");
    check(psnr(&a, &b, 1.0).unwrap() == psnr(&b, &a, 1.0).unwrap(), "psnr symmetry");
    let half = Image::filled(8, 8, 3, 0.5).unwrap();
    let shifted = Image::filled(8, 8, 3, 0.6).unwrap();
    check((psnr(&half, &shifted, 1.0).unwrap() - 20.0).abs() < 1e-9, "psnr of mse 0.01");
    check((ssim(&a, &a).unwrap() - 1.0).abs() < 1e-12, "ssim identity");
    check((ssim(&a, &b).unwrap() - ssim(&b, &a).unwrap()).abs() < 1e-12, "ssim symmetry");
    check(lsd(&a, &a).unwrap() == 0.0, "lsd identity");
    check((lsd(&a, &b).unwrap() - lsd(&b, &a).unwrap()).abs() < 1e-12, "lsd symmetry");
    check((lsd(&a, &a.map(|v| 2.0 * v)).unwrap() - 2f64.log10()).abs() < 1e-6, "lsd of doubled image");
    check(lpsd(&a, &a).unwrap() == 0.0, "lpsd identity");
    check((lpsd(&a, &b).unwrap() - lpsd(&b, &a).unwrap()).abs() < 1e-12, "lpsd symmetry");
    let pred = [-1.0, -1.0, 1.0, 1.0];
    let gt = [1.0, -1.0, -1.0, 1.0];
    check((iou_of_signs(&pred, &gt) - 1.0 / 3.0).abs() < 1e-12, "half-overlap iou");
    check(iou_of_signs(&gt, &gt) == 1.0, "iou identity");
    let ok = fails.is_empty();
    (ok, if ok { "identity, symmetry and hand-computed values hold".into() } else { format!("failed: {}", fails.join(", ")) })
}

fn c11_hash() -> Check {
    let mut store = ParamStore::new();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let grid = FeatureGrid::new(&mut store, &[8, 8, 8], 4, Boundary::Clamp, &mut rng).unwrap();
    let hash = HashGrid::new(&mut store, &[8, 8, 8], 512, 4, HashIndexing::Auto, &mut rng).unwrap();
    let values = store.get(grid.param()).values().to_vec();
    store.get_mut(hash.param()).values_mut().copy_from_slice(&values);
    let (g, h) = (Encoder::Grid(grid), Encoder::Hash(hash));
    let mut diff = 0;
    for i in 0..8 {
        for j in 0..8 {
            for k in 0..8 {
                let x = [i as f64 / 7.0, j as f64 / 7.0, k as f64 / 7.0];
                if g.encode(&store, &x).unwrap() != h.encode(&store, &x).unwrap() {
                    diff += 1;
                }
            }
        }
    }
    (diff == 0, format!("512 lattice nodes, {diff} differ bit-wise"))
}

fn c12_persistence() -> Check {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = ExperimentConfig::load("preset:kodak-gppeps-desk").unwrap();
    cfg.train.batches_per_epoch = 10;
    let signal = cfg.load_signal().unwrap();
    let (model, log) = fit(&cfg, &signal, &mut |_| {}).unwrap();
    let path = dir.path().join("a.pepsckpt");
    save_checkpoint(&path, &ModelCheckpoint::capture(&model, &cfg.train)).unwrap();
    let loaded = load_checkpoint(&path).unwrap();
    let again = dir.path().join("b.pepsckpt");
    save_checkpoint(&again, &loaded).unwrap();
    let identical = std::fs::read(&path).unwrap() == std::fs::read(&again).unwrap();
    let report = evaluate_parallel(&loaded.to_model().unwrap(), &signal).unwrap().report;
    let same = report == log.final_report;
    (
        identical && same,
        format!(
            "save->load->save byte-identical: {identical}; reloaded metrics equal training-end metrics: {same} (psnr {:.4})",
            report.get("psnr").unwrap()
        ),
    )
}

fn main() {
    let t = Instant::now();
    let mut results = vec![
        criterion(1, "pink dimension exactness", secs(1), c1_pink_dims),
        criterion(2, "concatenation dimension law", secs(1), c2_concat_law),
        criterion(3, "gradient integrity", secs(30), c3_gradients),
    ];
    let sweep_start = Instant::now();
    let runs = image_sweep();
    let sweep_time = sweep_start.elapsed();
    // criteria 4 and 5 share the sweep and its 15 minute budget
    results.push(report(4, "parameter sweep direction", secs(900), sweep_time, c4_sweep_direction(&runs)));
    results.push(report(5, "pink vs concat parity", secs(900), sweep_time, c5_pink_parity(&runs)));
    results.push(criterion(6, "SDF desk scale", secs(600), c6_sdf));
    results.push(criterion(7, "Lissajous uniqueness", secs(5), c7_lissajous));
    results.push(criterion(8, "rotation identity", secs(1), c8_rotation));
    results.push(criterion(9, "spectral law", secs(10), c9_spectra));
    results.push(criterion(10, "metric oracles", secs(5), c10_metrics));
    results.push(criterion(11, "hash grid oracle equivalence", secs(1), c11_hash));
    results.push(criterion(12, "persistence", secs(5), c12_persistence));
    let passed = results.iter().filter(|&&p| p).count();
    println!(
        "acceptance: {passed}/{} criteria passed, image sweep {:.0}s, total {:.0}s",
        results.len(),
        sweep_time.as_secs_f64(),
        t.elapsed().as_secs_f64()
    );
    if passed != results.len() {
        std::process::exit(1);
    }
}
