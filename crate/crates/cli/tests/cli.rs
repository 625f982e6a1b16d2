use std::path::Path;
use std::process::{Command, Output};

use satloss::loss::evaluate;
use satloss::raster::{load_npy_raw, save_npy};
use satloss::{BinaryMask, GrayImage, LossConfig};
use serde_json::Value;

fn satloss(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_satloss"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn ok(out: &Output) -> String {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn ring_mask() -> BinaryMask {
    BinaryMask::from_fn(12, 12, |r, c| {
        (2..10).contains(&r) && (2..10).contains(&c) && !((4..8).contains(&r) && (4..8).contains(&c))
    })
    .unwrap()
}

fn likelihood() -> GrayImage {
    GrayImage::from_fn(12, 12, |r, c| ((r * 31 + c * 17) % 23) as f64 / 23.0).unwrap()
}

fn fixture() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    save_npy(&likelihood(), dir.path().join("l.npy")).unwrap();
    save_npy(&ring_mask().to_gray(), dir.path().join("t.npy")).unwrap();
    dir
}

#[test]
fn diagram_of_mask_has_unit_bars() {
    let dir = fixture();
    let csv = ok(&satloss(&["diagram", "t.npy"], dir.path()));
    let mut lines = csv.lines();
    assert!(lines.next().unwrap().starts_with("dim,birth,death"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 4);
    for row in rows {
        let f: Vec<&str> = row.split(',').collect();
        assert_eq!((f[1], f[2]), ("1", "0"), "{row}");
    }
}

#[test]
fn loss_of_target_against_itself_is_zero() {
    let dir = fixture();
    let out = ok(&satloss(&["loss", "t.npy", "t.npy"], dir.path()));
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["schema"], 1);
    assert_eq!(v["topo_loss"], 0.0);
}

#[test]
fn gradient_support_round_trips() {
    let dir = fixture();
    for mode in ["spatial", "vanilla"] {
        ok(&satloss(
            &["grad", "l.npy", "t.npy", "--mode", mode, "-o", "g.npy"],
            dir.path(),
        ));
        let g = load_npy_raw(dir.path().join("g.npy")).unwrap();
        let cfg = LossConfig::with_mode(if mode == "spatial" {
            satloss::MatchMode::Spatial
        } else {
            satloss::MatchMode::Vanilla
        });
        let img = satloss::raster::load_gray(dir.path().join("l.npy")).unwrap();
        let ev = evaluate(&img, &ring_mask(), &cfg).unwrap();
        let expected: Vec<usize> = ev.topo_gradient.support().iter().map(|p| p.row * 12 + p.col).collect();
        let got: Vec<usize> = g
            .data
            .iter()
            .enumerate()
            .filter(|(_, &v)| v != 0.0)
            .map(|(i, _)| i)
            .collect();
        assert_eq!((g.rows, g.cols), (12, 12));
        assert_eq!(got, expected);
    }
}

#[test]
fn outputs_are_deterministic() {
    let dir = fixture();
    for args in [
        &["diagram", "l.npy"][..],
        &["match", "l.npy", "t.npy"],
        &["loss", "l.npy", "t.npy", "--no-pad", "--mode", "vanilla"],
        &["optimize", "--instance", "ring", "--size", "16", "--steps", "5"],
    ] {
        assert_eq!(ok(&satloss(args, dir.path())), ok(&satloss(args, dir.path())));
    }
}

#[test]
fn match_json_lists_both_dimensions() {
    let dir = fixture();
    let v: Value = serde_json::from_str(&ok(&satloss(
        &["match", "l.npy", "t.npy", "--overlay", "o.svg"],
        dir.path(),
    )))
    .unwrap();
    assert_eq!(v["schema"], 1);
    assert_eq!(v["mode"], "spatial");
    assert_eq!(v["dims"].as_array().unwrap().len(), 2);
    assert!(std::fs::read_to_string(dir.path().join("o.svg"))
        .unwrap()
        .starts_with("<svg"));
}

#[test]
fn eval_pairs_directories_in_sorted_order() {
    let dir = fixture();
    for sub in ["pred", "truth"] {
        std::fs::create_dir(dir.path().join(sub)).unwrap();
        for name in ["a.npy", "b.npy"] {
            save_npy(&ring_mask().to_gray(), dir.path().join(sub).join(name)).unwrap();
        }
    }
    let v: Value = serde_json::from_str(&ok(&satloss(
        &["eval", "--pred", "pred", "--truth", "truth"],
        dir.path(),
    )))
    .unwrap();
    assert_eq!(v["n_patches"], 2);
    assert_eq!(v["dice"], 1.0);
    assert_eq!(v["betti0_err"], 0.0);
    let table = ok(&satloss(
        &["eval", "--pred", "pred", "--truth", "truth", "--format", "table"],
        dir.path(),
    ));
    assert!(table.starts_with("Accuracy"));
}

#[test]
fn optimize_writes_trace_and_final_image() {
    let dir = fixture();
    ok(&satloss(
        &[
            "optimize",
            "--likelihood",
            "l.npy",
            "--target",
            "t.npy",
            "--steps",
            "12",
            "--trace",
            "trace.csv",
            "--final-image",
            "f.npy",
        ],
        dir.path(),
    ));
    let trace = std::fs::read_to_string(dir.path().join("trace.csv")).unwrap();
    let lines: Vec<&str> = trace.lines().collect();
    assert_eq!(lines[0], "step,total,pixel,topo,b0err,b1err");
    assert_eq!(lines.len(), 1 + 3);
    assert!(lines[3].starts_with("12,"));
    assert_eq!(load_npy_raw(dir.path().join("f.npy")).unwrap().rows, 12);
}

#[test]
fn bench_times_grow_with_size() {
    let dir = fixture();
    let out = ok(&satloss(
        &["bench", "--sizes", "32,128", "--repeats", "3", "--format", "json"],
        dir.path(),
    ));
    let v: Value = serde_json::from_str(&out).unwrap();
    let rows = v["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 2);
    let m: Vec<f64> = rows.iter().map(|r| r["median_secs"].as_f64().unwrap()).collect();
    assert!(m[0] <= m[1], "{m:?}");
}

#[test]
fn errors_are_single_json_lines_with_exit_one() {
    let dir = fixture();
    for (args, kind) in [
        (&["loss", "missing.npy", "t.npy"][..], "io"),
        (&["loss", "l.npy"], "usage"),
        (&["diagram", "l.npy", "--format", "table"], "usage"),
        (&["optimize", "--instance", "spiral"], "unknown_kind"),
        (&["eval", "--pred", "l.npy", "--truth", "l.npy"], "value_out_of_range"),
    ] {
        let out = satloss(args, dir.path());
        assert_eq!(out.status.code(), Some(1), "{args:?}");
        let stderr = String::from_utf8(out.stderr).unwrap();
        assert_eq!(stderr.lines().count(), 1, "{stderr}");
        let v: Value = serde_json::from_str(&stderr).unwrap();
        assert_eq!(v["error"], kind, "{args:?}");
        assert!(v["message"].is_string());
    }
}

#[test]
fn shape_mismatch_is_reported() {
    let dir = fixture();
    save_npy(&GrayImage::constant(5, 5, 0.5).unwrap(), dir.path().join("small.npy")).unwrap();
    let out = satloss(&["loss", "small.npy", "t.npy"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    let v: Value = serde_json::from_str(String::from_utf8(out.stderr).unwrap().trim()).unwrap();
    assert_eq!(v["error"], "shape_mismatch");
}
