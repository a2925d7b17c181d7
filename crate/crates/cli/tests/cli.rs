//! End-to-end tests of the `stereoforge` binary: every subcommand, the
//! file-naming conventions, and the exit-code contract (0 ok, 1 fatal,
//! 2 partial batch failure).

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use stereoforge::io::{read_image, read_mask, read_pfm, write_image, write_pfm};
use stereoforge::{ImagePlane, MapKind, ScalarMap};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_stereoforge"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout_json_lines(out: &Output) -> Vec<serde_json::Value> {
    String::from_utf8_lossy(&out.stdout)
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).expect("stdout line is JSON"))
        .collect()
}

/// Deterministic left image + raw depth fixture.
fn fixture(dir: &Path, tag: u32, w: usize, h: usize) -> (PathBuf, PathBuf) {
    let img_data: Vec<f64> = (0..w * h * 3)
        .map(|i| ((i as u32).wrapping_mul(37 + tag) % 256) as f64 / 255.0)
        .collect();
    let left = dir.join(format!("left_{tag}.png"));
    write_image(&ImagePlane::from_vec(w, h, img_data).unwrap(), &left).unwrap();

    let depth_data: Vec<f64> = (0..w * h)
        .map(|i| ((i as u32).wrapping_mul(13 + tag) % 97) as f64)
        .collect();
    let depth = dir.join(format!("depth_{tag}.pfm"));
    write_pfm(
        &ScalarMap::from_vec(w, h, MapKind::InverseDepth, depth_data).unwrap(),
        &depth,
    )
    .unwrap();
    (left, depth)
}

#[test]
fn generate_writes_all_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let (left, depth) = fixture(dir.path(), 1, 16, 10);
    let out = dir.path().join("out");

    let result = run(&[
        "generate",
        "--left",
        left.to_str().unwrap(),
        "--depth",
        depth.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--seed",
        "7",
    ]);
    assert!(result.status.success(), "{result:?}");
    let record = &stdout_json_lines(&result)[0];
    assert_eq!(record["status"], "ok");
    assert_eq!(record["seed"], 7);
    let s = record["sampled_s"].as_f64().unwrap();
    assert!(s > 0.0 && s < 0.2);

    for key in [
        "right_image",
        "disparity_pfm",
        "confidence_pfm",
        "m_noc_png",
        "m_inp_png",
        "warped_png",
    ] {
        let rel = record["outputs"][key].as_str().unwrap();
        assert!(out.join(rel).exists(), "missing output {rel}");
    }

    // No flipped depth was given: the confidence file is all ones.
    let conf = read_pfm(
        out.join(record["outputs"]["confidence_pfm"].as_str().unwrap()),
        MapKind::Confidence,
    )
    .unwrap();
    assert!(conf.data().iter().all(|&v| v == 1.0));
}

#[test]
fn generate_respects_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let (left, depth) = fixture(dir.path(), 2, 12, 8);
    let cfg = dir.path().join("cfg.toml");
    std::fs::write(&cfg, "seed = 3\n[scale]\nradius = 0.0\ncenter = 0.08\n").unwrap();
    let out = dir.path().join("out");

    let result = run(&[
        "generate",
        "--left",
        left.to_str().unwrap(),
        "--depth",
        depth.to_str().unwrap(),
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(result.status.success());
    let record = &stdout_json_lines(&result)[0];
    assert_eq!(
        record["sampled_s"].as_f64().unwrap(),
        0.08,
        "zero radius collapses the draw to the configured center"
    );
    assert_eq!(record["seed"], 3, "seed comes from the config file");
}

#[test]
fn flag_overrides_beat_config() {
    let dir = tempfile::tempdir().unwrap();
    let (left, depth) = fixture(dir.path(), 20, 12, 8);
    let out = dir.path().join("out");

    // An even dilation kernel is rejected wherever it comes from.
    let result = run(&[
        "generate",
        "--left",
        left.to_str().unwrap(),
        "--depth",
        depth.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--dilate-kernel",
        "4",
    ]);
    assert_eq!(result.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&result.stderr).contains("odd"));

    // Valid overrides pass through: kernel 1 disables dilation, and the
    // random backend picks up the --texture flag.
    let result = run(&[
        "generate",
        "--left",
        left.to_str().unwrap(),
        "--depth",
        depth.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--dilate-kernel",
        "1",
        "--sharpen-threshold",
        "100",
        "--backend",
        "random",
        "--texture",
        left.to_str().unwrap(),
    ]);
    assert!(result.status.success(), "{result:?}");
    let record = &stdout_json_lines(&result)[0];
    assert_eq!(record["backend"], "random_background");
}

#[test]
fn fatal_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let result = run(&[
        "generate",
        "--left",
        "/nonexistent.png",
        "--depth",
        "/nonexistent.pfm",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(result.status.code(), Some(1));
    assert!(!result.stderr.is_empty());
}

#[test]
fn batch_exit_codes_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let (left1, depth1) = fixture(dir.path(), 3, 10, 8);
    let (left2, depth2) = fixture(dir.path(), 4, 10, 8);

    // All-good list: exit 0.
    let list = dir.path().join("good.jsonl");
    std::fs::write(
        &list,
        format!(
            "{}\n{}\n",
            serde_json::json!({"left": left1, "depth": depth1, "dataset": "a"}),
            serde_json::json!({"left": left2, "depth": depth2, "dataset": "b"}),
        ),
    )
    .unwrap();
    let out = dir.path().join("out_good");
    let result = run(&[
        "batch",
        "--list",
        list.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--workers",
        "2",
        "--seed",
        "9",
    ]);
    assert_eq!(result.status.code(), Some(0), "{result:?}");
    let summary = &stdout_json_lines(&result)[0];
    assert_eq!(summary["ok"], 2);
    assert_eq!(summary["failed"], 0);
    assert!(out.join("manifest.jsonl").exists());

    // One corrupt depth: exit 2, failure recorded, others unaffected.
    let broken = dir.path().join("broken.pfm");
    std::fs::write(&broken, b"Pf\n4 4\n-1.0\nxx").unwrap();
    let list2 = dir.path().join("mixed.jsonl");
    std::fs::write(
        &list2,
        format!(
            "{}\n{}\n",
            serde_json::json!({"left": left1, "depth": depth1}),
            serde_json::json!({"left": left2, "depth": broken}),
        ),
    )
    .unwrap();
    let out2 = dir.path().join("out_mixed");
    let result = run(&[
        "batch",
        "--list",
        list2.to_str().unwrap(),
        "--out",
        out2.to_str().unwrap(),
    ]);
    assert_eq!(result.status.code(), Some(2));
    let manifest = std::fs::read_to_string(out2.join("manifest.jsonl")).unwrap();
    let records: Vec<serde_json::Value> = manifest
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(records.len(), 2);
    assert_eq!(records[0]["status"], "ok");
    assert_eq!(records[1]["status"], "failed");
    assert!(records[1]["error"].as_str().unwrap().contains("truncated"));
}

#[test]
fn stats_reports_per_dataset() {
    let dir = tempfile::tempdir().unwrap();
    let (left1, depth1) = fixture(dir.path(), 5, 10, 8);
    let (left2, depth2) = fixture(dir.path(), 6, 10, 8);
    let list = dir.path().join("list.jsonl");
    std::fs::write(
        &list,
        format!(
            "{}\n{}\n",
            serde_json::json!({"left": left1, "depth": depth1, "dataset": "coco"}),
            serde_json::json!({"left": left2, "depth": depth2, "dataset": "ade"}),
        ),
    )
    .unwrap();
    let out = dir.path().join("out");
    assert!(run(&[
        "batch",
        "--list",
        list.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ])
    .status
    .success());

    let manifest = out.join("manifest.jsonl");
    let result = run(&["stats", "--manifest", manifest.to_str().unwrap(), "--json"]);
    assert!(result.status.success());
    let stats = &stdout_json_lines(&result)[0];
    let datasets: Vec<&str> = stats
        .as_array()
        .unwrap()
        .iter()
        .map(|g| g["dataset"].as_str().unwrap())
        .collect();
    assert_eq!(datasets, ["ade", "coco"], "groups in lexicographic order");
    for g in stats.as_array().unwrap() {
        assert!(g["max"].as_f64().unwrap() >= g["mean"].as_f64().unwrap());
        assert_eq!(g["pixels"], 80);
    }

    // Table form also runs.
    let table = run(&["stats", "--manifest", manifest.to_str().unwrap()]);
    assert!(table.status.success());
    assert!(String::from_utf8_lossy(&table.stdout).contains("dataset"));
}

#[test]
fn confidence_subcommand_matches_library() {
    let dir = tempfile::tempdir().unwrap();
    let w = 8;
    let h = 5;
    let data: Vec<f64> = (0..w * h).map(|i| (i % 11) as f64).collect();
    let d = ScalarMap::from_vec(w, h, MapKind::InverseDepth, data).unwrap();
    let depth = dir.path().join("d.pfm");
    write_pfm(&d, &depth).unwrap();

    // The model is perfectly flip-consistent: prediction on the mirrored
    // image is the mirror of the prediction.
    let flipped = dir.path().join("df.pfm");
    write_pfm(&d.hflip(), &flipped).unwrap();

    let out_file = dir.path().join("c.pfm");
    let result = run(&[
        "confidence",
        "--depth",
        depth.to_str().unwrap(),
        "--depth-flipped",
        flipped.to_str().unwrap(),
        "--out-file",
        out_file.to_str().unwrap(),
    ]);
    assert!(result.status.success());
    let c = read_pfm(&out_file, MapKind::Confidence).unwrap();
    assert!(c.data().iter().all(|&v| v == 1.0));
}

#[test]
fn inpaint_export_apply_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let (left, depth) = fixture(dir.path(), 7, 14, 9);
    let out = dir.path().join("work");

    let result = run(&[
        "inpaint-export",
        "--left",
        left.to_str().unwrap(),
        "--depth",
        depth.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--seed",
        "11",
        "--index",
        "2",
    ]);
    assert!(result.status.success());
    let info = &stdout_json_lines(&result)[0];
    assert_eq!(info["seed"], 11);
    assert_eq!(info["index"], 2);
    let warped_path = out.join("left_7.warped.png");
    let mask_path = out.join("left_7.minp.png");
    assert!(warped_path.exists() && mask_path.exists(), "export convention");

    // "Inpaint" with solid green, then apply.
    let green = ImagePlane::from_vec(14, 9, [0.0, 1.0, 0.0].repeat(14 * 9)).unwrap();
    let ext_path = dir.path().join("filled.png");
    write_image(&green, &ext_path).unwrap();
    let result = run(&[
        "inpaint-apply",
        "--stem",
        "left_7",
        "--external",
        ext_path.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(result.status.success());
    let inpainted = read_image(out.join("left_7.inpainted.png")).unwrap();
    let warped = read_image(&warped_path).unwrap();
    let holes = read_mask(&mask_path).unwrap();
    for y in 0..9 {
        for x in 0..14 {
            if holes.is_set(x, y) {
                assert_eq!(inpainted.pixel(x, y), [0.0, 1.0, 0.0]);
            } else {
                assert_eq!(inpainted.pixel(x, y), warped.pixel(x, y));
            }
        }
    }

    // Generate with the same (seed, index) and the external image: the
    // warp must match the export bit-for-bit.
    let final_out = dir.path().join("final");
    let cfg = dir.path().join("ext.toml");
    std::fs::write(&cfg, "[inpaint]\nbackend = \"external\"\n").unwrap();
    let inpainted_path = out.join("left_7.inpainted.png");
    let result = run(&[
        "generate",
        "--left",
        left.to_str().unwrap(),
        "--depth",
        depth.to_str().unwrap(),
        "--external",
        inpainted_path.to_str().unwrap(),
        "--out",
        final_out.to_str().unwrap(),
        "--seed",
        "11",
        "--index",
        "2",
        "--config",
        cfg.to_str().unwrap(),
    ]);
    assert!(result.status.success(), "{result:?}");
    let rec = &stdout_json_lines(&result)[0];
    assert_eq!(
        std::fs::read(final_out.join(rec["outputs"]["warped_png"].as_str().unwrap())).unwrap(),
        std::fs::read(&warped_path).unwrap(),
        "same (seed, index) reproduces the exported warp"
    );
}

#[test]
fn loss_on_perfect_prediction_is_zero() {
    let dir = tempfile::tempdir().unwrap();
    let (left, depth) = fixture(dir.path(), 8, 12, 8);
    let out = dir.path().join("out");
    let result = run(&[
        "generate",
        "--left",
        left.to_str().unwrap(),
        "--depth",
        depth.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--seed",
        "5",
    ]);
    assert!(result.status.success());
    let record = &stdout_json_lines(&result)[0];
    let o = &record["outputs"];
    let path = |k: &str| out.join(o[k].as_str().unwrap());

    // Predicting exactly the label with all-ones confidence: combined
    // loss 0 everywhere.
    let maps_dir = dir.path().join("maps");
    let result = run(&[
        "loss",
        "--pred",
        path("disparity_pfm").to_str().unwrap(),
        "--disp",
        path("disparity_pfm").to_str().unwrap(),
        "--conf",
        path("confidence_pfm").to_str().unwrap(),
        "--left",
        left.to_str().unwrap(),
        "--right",
        path("right_image").to_str().unwrap(),
        "--mnoc",
        path("m_noc_png").to_str().unwrap(),
        "--minp",
        path("m_inp_png").to_str().unwrap(),
        "--dump-maps",
        "--out",
        maps_dir.to_str().unwrap(),
    ]);
    assert!(result.status.success(), "{result:?}");
    let summary = &stdout_json_lines(&result)[0];
    assert_eq!(summary["mean"].as_f64().unwrap(), 0.0);
    assert_eq!(summary["counts"]["total"], 96);
    for name in [
        "loss_disparity_l1.pfm",
        "loss_photometric.pfm",
        "loss_masked_photometric.pfm",
        "loss_combined.pfm",
    ] {
        assert!(maps_dir.join(name).exists(), "dumped map {name}");
    }
    let combined = read_pfm(maps_dir.join("loss_combined.pfm"), MapKind::Value).unwrap();
    assert!(combined.data().iter().all(|&v| v == 0.0));

    // Loss flag overrides: beta = 0 turns the photometric term into pure
    // L1, which is still zero here; the command must accept the flags.
    let result = run(&[
        "loss",
        "--pred",
        path("disparity_pfm").to_str().unwrap(),
        "--disp",
        path("disparity_pfm").to_str().unwrap(),
        "--left",
        left.to_str().unwrap(),
        "--right",
        path("right_image").to_str().unwrap(),
        "--mnoc",
        path("m_noc_png").to_str().unwrap(),
        "--minp",
        path("m_inp_png").to_str().unwrap(),
        "--beta",
        "0",
        "--mu",
        "0.5",
        "--ssim-window",
        "5",
        "--mean-over-kept",
    ]);
    assert!(result.status.success(), "{result:?}");
}

#[test]
fn eval_scores_pairs_and_aggregates() {
    let dir = tempfile::tempdir().unwrap();
    let gt = ScalarMap::from_vec(4, 1, MapKind::Disparity, vec![10.0, 20.0, 30.0, 200.0]).unwrap();
    let pred =
        ScalarMap::from_vec(4, 1, MapKind::Disparity, vec![10.5, 22.5, 30.0, 100.0]).unwrap();
    let gt_path = dir.path().join("gt.pfm");
    let pred_path = dir.path().join("pred.pfm");
    write_pfm(&gt, &gt_path).unwrap();
    write_pfm(&pred, &pred_path).unwrap();

    let pair = format!(
        "{}:{}",
        pred_path.to_str().unwrap(),
        gt_path.to_str().unwrap()
    );
    let result = run(&["eval", &pair, "--tau", "1,2"]);
    assert!(result.status.success());
    let lines = stdout_json_lines(&result);
    assert_eq!(lines.len(), 2, "one pair line plus the aggregate");
    // Errors: 0.5, 2.5, 0, 100 -> epe 25.75; >1: 2/4, >2: 2/4.
    assert_eq!(lines[0]["epe"].as_f64().unwrap(), 25.75);
    assert_eq!(lines[0]["bad"][0][1].as_f64().unwrap(), 50.0);
    assert_eq!(lines[1]["aggregate"], true);
    assert_eq!(lines[1]["epe"].as_f64().unwrap(), 25.75);

    // The disparity cap excludes the 200 px ground-truth pixel.
    let result = run(&["eval", &pair, "--tau", "1", "--cap", "192"]);
    let lines = stdout_json_lines(&result);
    assert_eq!(lines[0]["valid_pixels"], 3);
    assert_eq!(lines[0]["epe"].as_f64().unwrap(), 1.0);

    // A perfect pair with an explicit mask.
    let mask = stereoforge::BinaryMask::from_vec(4, 1, vec![1, 1, 1, 0]).unwrap();
    let mask_path = dir.path().join("m.png");
    stereoforge::io::write_mask(&mask, &mask_path).unwrap();
    let pair3 = format!(
        "{}:{}:{}",
        gt_path.to_str().unwrap(),
        gt_path.to_str().unwrap(),
        mask_path.to_str().unwrap()
    );
    let result = run(&["eval", &pair3, "--tau", "3"]);
    let lines = stdout_json_lines(&result);
    assert_eq!(lines[0]["epe"].as_f64().unwrap(), 0.0);
    assert_eq!(lines[0]["valid_pixels"], 3);
}

#[test]
fn preview_renders_collage() {
    let dir = tempfile::tempdir().unwrap();
    let (left, depth) = fixture(dir.path(), 9, 10, 7);
    let list = dir.path().join("list.jsonl");
    std::fs::write(
        &list,
        format!("{}\n", serde_json::json!({"left": left, "depth": depth})),
    )
    .unwrap();
    let out = dir.path().join("out");
    assert!(run(&[
        "batch",
        "--list",
        list.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ])
    .status
    .success());

    let preview_path = dir.path().join("p.png");
    let result = run(&[
        "preview",
        "--manifest",
        out.join("manifest.jsonl").to_str().unwrap(),
        "--index",
        "0",
        "--out-file",
        preview_path.to_str().unwrap(),
    ]);
    assert!(result.status.success(), "{result:?}");
    let collage = read_image(&preview_path).unwrap();
    assert_eq!(collage.dims(), (30, 21), "3x input width and height");
}
