use std::path::Path;
use std::process::{Command, Output};

use peps::config::ExperimentConfig;
use peps::presets::NAMES;

fn peps(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_peps"))
        .args(args)
        .current_dir(cwd)
        .env("PEPS_THREADS", "2")
        .output()
        .expect("run peps")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const TINY: &str = "[task]
kind = image
signal = builtin:dead-leaves:32

[encoder]
kind = bi_grid
resolution = 8, 8
feat_dim = 4

[aggregator]
kind = pink
frequencies = 2

[mlp]
hidden_layers = 2
hidden_width = 16

[train]
batch_size = 256
epochs = 2
batches_per_epoch = 15
log_every = 10
";

fn tiny(dir: &Path) -> String {
    let path = dir.join("tiny.cfg");
    std::fs::write(&path, TINY).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn every_preset_validates() {
    for name in NAMES {
        let cfg = ExperimentConfig::load(&format!("preset:{name}")).unwrap_or_else(|e| panic!("{name}: {e}"));
        let summary = cfg.summary().unwrap();
        assert!(summary.contains("mlp input dim:") && summary.contains("parameters:"), "{name}");
    }
    let kodak = ExperimentConfig::load("preset:kodak-gppeps").unwrap();
    assert_eq!(kodak.model.mlp.input_dim, 17 + 2 * (8 + 4 + 2));
    assert_eq!(kodak.train.total_steps(), 120_000);
    let sdf = ExperimentConfig::load("preset:sdf-grid-peps").unwrap();
    assert_eq!(sdf.model.mlp.input_dim, 7 * 18);
}

#[test]
fn param_count_only_does_not_train() {
    let dir = tempfile::tempdir().unwrap();
    let o = peps(&["train", "--config", "preset:ntc-peps", "--param-count-only"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let cfg = ExperimentConfig::load("preset:ntc-peps").unwrap();
    let want = format!("parameters: {}", cfg.model.param_count().unwrap());
    assert!(stdout(&o).contains(&want), "{}", stdout(&o));
    assert!(std::fs::read_dir(dir.path()).unwrap().next().is_none());
}

#[test]
fn desk_preset_trains_to_finite_psnr() {
    let dir = tempfile::tempdir().unwrap();
    let o = peps(&["train", "--config", "preset:kodak-gppeps-desk", "--out", "run"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let metrics = std::fs::read_to_string(dir.path().join("run/metrics.csv")).unwrap();
    let mut lines = metrics.lines();
    assert_eq!(lines.next(), Some("psnr,ssim,lsd,lpsd"));
    let psnr: f64 = lines.next().unwrap().split(',').next().unwrap().parse().unwrap();
    assert!(psnr.is_finite() && psnr > 20.0, "psnr {psnr}");
}

#[test]
fn train_is_deterministic_and_eval_reproduces_it() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny(dir.path());
    for out in ["a", "b"] {
        let o = peps(&["train", "--config", &cfg, "--seed", "3", "--out", out], dir.path());
        assert!(o.status.success(), "{}", stderr(&o));
    }
    let read = |p: &str| std::fs::read(dir.path().join(p)).unwrap();
    assert_eq!(read("a/log.csv"), read("b/log.csv"));
    assert_eq!(read("a/metrics.csv"), read("b/metrics.csv"));
    assert_eq!(read("a/checkpoint.pepsckpt"), read("b/checkpoint.pepsckpt"));
    let log = String::from_utf8(read("a/log.csv")).unwrap();
    assert!(log.starts_with("step,loss,lr,psnr\n"));
    assert_eq!(log.lines().count(), 31);

    let o = peps(&["eval", "a/checkpoint.pepsckpt", "builtin:dead-leaves:32", "--out", "ev"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(read("ev/metrics.csv"), read("a/metrics.csv"));
    assert!(dir.path().join("ev/reconstruction.png").exists());

    let other = peps(&["train", "--config", &cfg, "--seed", "4", "--out", "c"], dir.path());
    assert!(other.status.success());
    assert_ne!(read("c/log.csv"), read("a/log.csv"));
}

#[test]
fn eval_on_mismatched_signal_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny(dir.path());
    let mut text = std::fs::read_to_string(&cfg).unwrap();
    text = text.replace("batches_per_epoch = 15", "batches_per_epoch = 1");
    std::fs::write(&cfg, text).unwrap();
    assert!(peps(&["train", "--config", &cfg, "--out", "a"], dir.path()).status.success());
    let o = peps(&["eval", "a/checkpoint.pepsckpt", "builtin:sphere:8"], dir.path());
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.cfg");
    std::fs::write(&bad, TINY.replace("feat_dim = 4", "feat_dim = four")).unwrap();
    let o = peps(&["train", "--config", bad.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 8"), "{}", stderr(&o));

    let diverge = dir.path().join("diverge.cfg");
    std::fs::write(&diverge, TINY.replace("log_every = 10", "log_every = 10\nlr = 1e300")).unwrap();
    let o = peps(&["train", "--config", diverge.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("diverged"), "{}", stderr(&o));

    std::fs::write(dir.path().join("junk.pepsckpt"), b"not a checkpoint").unwrap();
    let o = peps(&["eval", "junk.pepsckpt", "builtin:dead-leaves:8"], dir.path());
    assert_eq!(o.status.code(), Some(4));
    let o = peps(&["spectra", "missing.png"], dir.path());
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn spectra_reports_alpha() {
    let dir = tempfile::tempdir().unwrap();
    let o = peps(&["spectra", "builtin:white-noise:128", "--out", "noise.txt"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let alpha: f64 = stdout(&o).lines().next().unwrap().trim_start_matches("alpha: ").parse().unwrap();
    assert!(alpha.abs() < 0.2, "{alpha}");
    let text = std::fs::read_to_string(dir.path().join("noise.txt")).unwrap();
    assert_eq!(text.lines().count(), 65);
    assert!(text.lines().all(|l| l.split_whitespace().count() == 2));

    let flat = peps_core::signals::Image::filled(16, 16, 3, 0.5).unwrap();
    peps::io::save_image(&dir.path().join("flat.png"), &flat).unwrap();
    let o = peps(&["spectra", "flat.png"], dir.path());
    assert!(o.status.success());
    assert!(stdout(&o).contains("alpha: undefined"));
    assert!(stderr(&o).contains("warning"));
}

#[test]
fn lissajous_curves_and_comparisons() {
    let dir = tempfile::tempdir().unwrap();
    let o = peps(&["lissajous", "0", "0", "--samples", "50", "--out", "zero.txt"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(dir.path().join("zero.txt")).unwrap();
    assert_eq!(text.lines().count(), 50);
    assert!(text.split_whitespace().all(|v| v.parse::<f64>().unwrap() == 0.0));

    let o = peps(&["lissajous", "0.2", "0.3", "--compare", "0.3", "0.45"], dir.path());
    assert!(stdout(&o).contains("verdict: distinct"), "{}", stdout(&o));
    let o = peps(&["lissajous", "0.2", "0.3", "--compare", "0.2", "0.3"], dir.path());
    assert!(stdout(&o).contains("gap: 0e0"), "{}", stdout(&o));
    assert!(stdout(&o).contains("verdict: same curve"));
}

#[test]
fn sweep_emits_one_row_per_configuration() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny(dir.path());
    let o = peps(&["sweep", "--config", &cfg, "--resolutions", "4,8", "--feat-dims", "2,4", "--out", "s"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let table = stdout(&o);
    let rows: Vec<Vec<&str>> = table.lines().skip(1).map(|l| l.split(',').collect()).collect();
    assert_eq!(table.lines().next(), Some("resolution,feat_dim,params,psnr"));
    assert_eq!(rows.len(), 4);
    for pair in rows.chunks(2) {
        let params: Vec<usize> = pair.iter().map(|r| r[2].parse().unwrap()).collect();
        assert!(params[0] < params[1]);
    }
    assert_eq!(std::fs::read_to_string(dir.path().join("s/sweep.csv")).unwrap(), table);
}
