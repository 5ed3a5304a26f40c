mod common;

use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

use common::*;

const SMALL: &[&str] = &["--elemsize", "64", "--xstep", "32", "--ystep", "32", "--n-scree", "20", "--max-iter", "40"];

fn texmap(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_texmap"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn report(dir: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("report.json")).unwrap()).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn single_run_succeeds_and_prints_a_summary() {
    let tmp = tempfile::tempdir().unwrap();
    let input = small_scene(tmp.path(), "scene.tif", 1);
    let out = tmp.path().join("out");
    let mut args = vec![s(&input), "--out", s(&out), "--threads", "1"];
    args.extend_from_slice(SMALL);
    let o = texmap(&args);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(o.status.code(), Some(0));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("k=") && stdout.contains("windows=49"), "{stdout}");
    let r = report(&out.join("scene"));
    assert_eq!(r["grid"]["n_windows"], 49);
    assert_eq!(r["config"]["elemsize"], 64);
    assert!(r["config"].get("out").is_none());
}

#[test]
fn every_setting_reaches_the_report() {
    let tmp = tempfile::tempdir().unwrap();
    let input = small_scene(tmp.path(), "scene.tif", 2);
    let out = tmp.path().join("out");
    let o = texmap(&[
        s(&input),
        "--out",
        s(&out),
        "--elemsize",
        "64",
        "--xstep",
        "48",
        "--ystep",
        "40",
        "--components",
        "2",
        "--n-scree",
        "12",
        "--max-iter",
        "15",
        "--tol",
        "0.001",
        "--pixel-size-nm",
        "0.5",
        "--dc-exclusion",
        "2.5",
        "--isotropy-threshold",
        "3",
        "--smooth-scree",
        "--scree-tie-tol",
        "0.25",
        "--sweep",
        "32,64",
        "--rescale-2048",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let c = &report(&out.join("scene"))["config"];
    let want = serde_json::json!({
        "elemsize": 64, "xstep": 48, "ystep": 40, "rescale_2048": true, "components": 2,
        "n_scree": 12, "max_iter": 15, "tol": 0.001, "pixel_size_nm": 0.5, "dc_exclusion": 2.5,
        "isotropy_threshold": 3.0, "smooth_scree": true, "scree_tie_tol": 0.25, "sweep": [32, 64]
    });
    assert_eq!(c, &want);
    let r = report(&out.join("scene"));
    assert_eq!(r["input"]["width"], 2048);
    assert_eq!(r["input"]["original_width"], 256);
    assert_eq!(r["input"]["pixel_size_nm"], 0.0625);
}

#[test]
fn config_file_settings_apply_and_flags_win() {
    let tmp = tempfile::tempdir().unwrap();
    let input = small_scene(tmp.path(), "scene.tif", 3);
    let out = tmp.path().join("out");
    let cfg = tmp.path().join("run.conf");
    std::fs::write(
        &cfg,
        format!(
            "# small run\nelemsize = 64\nxstep = 32\nystep = 32\nn_scree = 20\nmax-iter = 30\ncomponents = 4\nout = {}\n",
            out.display()
        ),
    )
    .unwrap();
    let o = texmap(&[s(&input), "--config", s(&cfg), "--components", "2"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r = report(&out.join("scene"));
    assert_eq!(r["k"], 2);
    assert_eq!(r["config"]["max_iter"], 30);
    assert_eq!(r["config"]["xstep"], 32);
}

#[test]
fn bad_config_line_is_a_usage_failure() {
    let tmp = tempfile::tempdir().unwrap();
    let input = small_scene(tmp.path(), "scene.tif", 3);
    let cfg = tmp.path().join("bad.conf");
    std::fs::write(&cfg, "elemsize = 64\nwindow = 3\n").unwrap();
    let o = texmap(&[s(&input), "--config", s(&cfg)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));
}

#[test]
fn usage_errors_exit_one() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(texmap(&[]).status.code(), Some(1));
    assert_eq!(texmap(&["x.tif", "--bogus"]).status.code(), Some(1));
    let pattern = format!("{}/*.nothing", tmp.path().display());
    let o = texmap(&[&pattern]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("no input matches"));

    let input = small_scene(tmp.path(), "scene.tif", 4);
    let o = texmap(&[s(&input), "--elemsize", "512", "--out", s(&tmp.path().join("o"))]);
    assert_eq!(o.status.code(), Some(1), "window larger than the image");
    assert!(String::from_utf8_lossy(&o.stderr).contains("512"));
    assert_eq!(texmap(&[s(&input), "--xstep", "0"]).status.code(), Some(1));
}

#[test]
fn help_and_version_exit_zero() {
    let o = texmap(&["--help"]);
    assert_eq!(o.status.code(), Some(0));
    let help = String::from_utf8_lossy(&o.stdout);
    for flag in ["--elemsize", "--xstep", "--ystep", "--components", "--n-scree", "--rescale-2048", "--pixel-size-nm", "--max-iter", "--tol", "--dc-exclusion", "--sweep", "--out", "--threads", "--config"] {
        assert!(help.contains(flag), "help lacks {flag}");
    }
    assert_eq!(texmap(&["--version"]).status.code(), Some(0));
}

#[test]
fn numerical_failure_exits_two() {
    let tmp = tempfile::tempdir().unwrap();
    let input = tmp.path().join("huge.tif");
    let (w, h) = (128u32, 128u32);
    let data: Vec<f64> = (0..w * h)
        .map(|i| if (i % w / 4) % 2 == 0 { 1e100 } else { 0.0 })
        .collect();
    write_f64_tiff(&input, w, h, &data);
    let o = texmap(&[s(&input), "--elemsize", "64", "--xstep", "32", "--ystep", "32", "--components", "2", "--out", s(&tmp.path().join("o"))]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn batch_with_a_corrupt_file_exits_nonzero() {
    let tmp = tempfile::tempdir().unwrap();
    let src = tmp.path().join("in");
    std::fs::create_dir(&src).unwrap();
    small_scene(&src, "a.tif", 10);
    small_scene(&src, "b.tif", 11);
    std::fs::write(src.join("c.tif"), b"II*\0garbage").unwrap();
    let out = tmp.path().join("out");
    let pattern = format!("{}/*.tif", src.display());
    let mut args = vec![pattern.as_str(), "--out", s(&out)];
    args.extend_from_slice(SMALL);
    let o = texmap(&args);
    assert_eq!(o.status.code(), Some(1));
    assert!(out.join("a/report.json").is_file());
    assert!(out.join("b/report.json").is_file());
    assert!(out.join("index.html").is_file());
    assert!(String::from_utf8_lossy(&o.stderr).contains("c.tif"));

    std::fs::remove_file(src.join("c.tif")).unwrap();
    let o = texmap(&args);
    assert_eq!(o.status.code(), Some(0));
}
