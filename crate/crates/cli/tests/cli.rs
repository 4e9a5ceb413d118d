use playclass::chunking::{load_review_manifest, write_corrections, Corrections};
use playclass::dataset::embeddings::write_embeddings;
use playclass::dataset::tracks::serialize_tracks;
use playclass::dataset::{load_tracks, WINDOW_FRAMES};
use playclass::synth::{generate, synthetic_embeddings, write_fixture, SynthConfig, SynthDataset};
use std::path::Path;
use std::process::{Command, Output};

fn playclass(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_playclass"))
        .args(args)
        .env("PLAYCLASS_LOG", "error")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = playclass(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn fixture(dir: &Path, cages: u32, windows: u32) -> SynthDataset {
    let data = generate(&SynthConfig {
        cages,
        windows_per_bird: windows,
        seed: 1,
        ..SynthConfig::default()
    })
    .unwrap();
    write_fixture(dir, &data).unwrap();
    data
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn features_writes_171_value_columns() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fixture(d, 1, 3);
    let out = d.join("f.csv");
    ok(&[
        "features",
        "--tracks",
        s(&d.join("tracks.tsv")),
        "--labels",
        s(&d.join("labels.csv")),
        "--out",
        s(&out),
        "--out-dir",
        s(d),
    ]);
    let text = std::fs::read_to_string(&out).unwrap();
    let header: Vec<&str> = text.lines().next().unwrap().split(',').collect();
    assert_eq!(header[0], "window_key");
    assert_eq!(header.last().unwrap(), &"flag_low_coverage");
    assert_eq!(header.len(), 171 + 2);
    assert_eq!(text.lines().count(), 1 + 9);
    assert!(d.join("run.json").is_file());
}

#[test]
fn trackeval_on_identical_files_scores_one() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fixture(d, 1, 1);
    let t = d.join("tracks.tsv");
    let stdout = ok(&[
        "trackeval",
        "--gt",
        s(&t),
        "--pred",
        s(&t),
        "--out-dir",
        s(d),
    ]);
    assert!(stdout.contains("HOTA 1.0000"), "{stdout}");
    assert!(stdout.contains("IDF1 1.0000"), "{stdout}");
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(d.join("tracking_report.json")).unwrap())
            .unwrap();
    assert_eq!(report["hota"]["mean"], 1.0);
}

fn run_spec(d: &Path, extra: &str) -> std::path::PathBuf {
    let p = d.join("run.toml");
    std::fs::write(
        &p,
        format!(
            r#"name = "features-mlp"
seed = 3
[data]
labels = "labels.csv"
videos = "videos.csv"
birds = "birds.csv"
features = "features.csv"
[train]
epochs = 2
[model]
h_mlp = 32
{extra}"#
        ),
    )
    .unwrap();
    p
}

#[test]
fn train_is_byte_reproducible_and_evaluate_agrees() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fixture(d, 5, 4);
    ok(&[
        "features",
        "--tracks",
        s(&d.join("tracks.tsv")),
        "--labels",
        s(&d.join("labels.csv")),
        "--out-dir",
        s(d),
    ]);
    let spec = run_spec(d, "");
    let (a, b) = (d.join("a"), d.join("b"));
    ok(&["train", "--config", s(&spec), "--out-dir", s(&a)]);
    ok(&[
        "--jobs",
        "2",
        "train",
        "--config",
        s(&spec),
        "--out-dir",
        s(&b),
    ]);
    for f in [
        "report.json",
        "confusion.csv",
        "predictions.csv",
        "fold3.ckpt",
        "fold5.log.jsonl",
    ] {
        assert_eq!(
            std::fs::read(a.join(f)).unwrap(),
            std::fs::read(b.join(f)).unwrap(),
            "{f}"
        );
    }
    let other = d.join("c");
    ok(&[
        "train",
        "--config",
        s(&spec),
        "--seed",
        "99",
        "--out-dir",
        s(&other),
    ]);
    let run: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(other.join("run.json")).unwrap()).unwrap();
    assert_eq!(run["resolved"]["spec"]["seed"], 99);

    let eval_dir = d.join("eval");
    ok(&[
        "evaluate",
        "--predictions",
        s(&a.join("predictions.csv")),
        "--out-dir",
        s(&eval_dir),
    ]);
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(a.join("report.json")).unwrap()).unwrap();
    let eval: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(eval_dir.join("evaluation.json")).unwrap())
            .unwrap();
    assert_eq!(report["report"], eval);

    let abl = d.join("abl");
    ok(&[
        "ablate",
        "--config",
        s(&spec),
        "--toggle",
        "epochs=1",
        "--toggle",
        "no_label_smoothing",
        "--out-dir",
        s(&abl),
    ]);
    let csv = std::fs::read_to_string(abl.join("ablation.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4, "{csv}");
    let bad = playclass(&[
        "ablate",
        "--config",
        s(&spec),
        "--toggle",
        "dropout",
        "--out-dir",
        s(&abl),
    ]);
    assert_eq!(bad.status.code(), Some(1));
}

#[test]
fn chunk_review_loop_round_trips_with_confirmed_review() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    // 14 windows = 1750 frames: one boundary near frame 1500.
    let data = fixture(d, 1, 14);
    assert_eq!(data.manifest.videos[0].frame_count, 14 * WINDOW_FRAMES);
    let tracks = d.join("tracks.tsv");
    ok(&[
        "plan-chunks",
        "--tracks",
        s(&tracks),
        "--videos",
        s(&d.join("videos.csv")),
        "--birds",
        s(&d.join("birds.csv")),
        "--out-dir",
        s(d),
    ]);
    let plan = d.join("plan_cage1_day1.json");
    let plan_json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&plan).unwrap()).unwrap();
    assert_eq!(plan_json["boundaries"].as_array().unwrap().len(), 1);
    assert_eq!(plan_json["prompts"].as_array().unwrap().len(), 3);

    ok(&[
        "match-ids",
        "--plan",
        s(&plan),
        "--tracks",
        s(&tracks),
        "--out-dir",
        s(d),
    ]);
    let matches: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(d.join("matches_cage1_day1.json")).unwrap())
            .unwrap();
    assert_eq!(matches[0]["assignment"].as_array().unwrap().len(), 3);

    ok(&[
        "review-export",
        "--plan",
        s(&plan),
        "--tracks",
        s(&tracks),
        "--out-dir",
        s(d),
    ]);
    let manifest = load_review_manifest(&d.join("review/manifest.json")).unwrap();
    assert_eq!(manifest.boundaries[0].proposals.len(), 3);
    assert!(manifest.boundaries[0]
        .proposals
        .iter()
        .all(|p| !p.crop_missing));

    let corr = d.join("corrections.json");
    write_corrections(&corr, &Corrections::confirm_all(&manifest)).unwrap();
    let fixed = d.join("fixed.tsv");
    ok(&[
        "apply-corrections",
        "--plan",
        s(&plan),
        "--tracks",
        s(&tracks),
        "--corrections",
        s(&corr),
        "--out",
        s(&fixed),
        "--out-dir",
        s(d),
    ]);
    assert_eq!(
        serialize_tracks(&load_tracks(&fixed).unwrap(), false),
        serialize_tracks(&load_tracks(&tracks).unwrap(), false)
    );
}

#[test]
fn analyze_writes_cka_knn_and_spearman() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let data = fixture(d, 1, 12);
    for (name, seed) in [("a", 1), ("b", 2)] {
        let mut bundle = synthetic_embeddings(&data, 8, 6, seed).unwrap();
        bundle.backbone_id = name.into();
        write_embeddings(&d.join(format!("emb_{name}")), &bundle).unwrap();
    }
    ok(&[
        "features",
        "--tracks",
        s(&d.join("tracks.tsv")),
        "--labels",
        s(&d.join("labels.csv")),
        "--out-dir",
        s(d),
    ]);
    let names = ["other", "object", "locomotor"];
    let mut preds = String::from("video_id,bird_id,start_frame,fold,truth,predicted,correct\n");
    for (i, l) in data.labels.iter().enumerate() {
        let t = l.category.class_index().unwrap();
        let p = if i % 3 == 0 { (t + 1) % 3 } else { t };
        preds += &format!(
            "{},{},{},1,{},{},{}\n",
            l.video_id,
            l.bird_id,
            l.start_frame,
            names[t],
            names[p],
            u8::from(t == p)
        );
    }
    std::fs::write(d.join("predictions.csv"), preds).unwrap();
    let out = d.join("analysis");
    let stdout = ok(&[
        "analyze",
        "--embeddings",
        s(&d.join("emb_a")),
        "--embeddings",
        s(&d.join("emb_b")),
        "--labels",
        s(&d.join("labels.csv")),
        "--predictions",
        s(&d.join("predictions.csv")),
        "--features",
        s(&d.join("features.csv")),
        "--category",
        "other",
        "--out-dir",
        s(&out),
    ]);
    assert!(stdout.contains("spearman rho"), "{stdout}");
    let cka = std::fs::read_to_string(out.join("cka.csv")).unwrap();
    assert_eq!(cka.lines().next().unwrap(), "backbone,a,b");
    assert!(cka.lines().nth(1).unwrap().starts_with("a,1,"));
    assert!(std::fs::read_to_string(out.join("knn.csv"))
        .unwrap()
        .starts_with("fine_label,neighbour_label,fraction\n"));
    let sp: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("spearman.json")).unwrap()).unwrap();
    assert!(sp["rho"].as_f64().unwrap().abs() <= 1.0);
    assert!(out.join("confusion_percent.csv").is_file());
    assert!(out.join("embeddings_a.csv").is_file());
}

#[test]
fn exit_codes_distinguish_usage_and_validation_errors() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(playclass(&["features", "--bogus"]).status.code(), Some(2));
    assert_eq!(
        playclass(&["validate", "--out-dir", s(d)]).status.code(),
        Some(2)
    );
    std::fs::write(
        d.join("labels.csv"),
        "video_id,bird_id,start_frame,end_frame,behaviour\nv,1,0,125,Dancing\n",
    )
    .unwrap();
    let out = playclass(&[
        "validate",
        "--labels",
        s(&d.join("labels.csv")),
        "--out-dir",
        s(d),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Dancing"));
    fixture(d, 1, 1);
    ok(&[
        "validate",
        "--tracks",
        s(&d.join("tracks.tsv")),
        "--labels",
        s(&d.join("labels.csv")),
        "--videos",
        s(&d.join("videos.csv")),
        "--birds",
        s(&d.join("birds.csv")),
        "--out-dir",
        s(d),
    ]);
}
