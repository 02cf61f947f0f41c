use std::path::Path;
use std::process::Command;

fn run_cli(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_motion-gan")).args(args).output().expect("spawn motion-gan")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

const TINY: &[&str] = &[
    "m=3",
    "n=2",
    "z_dim=4",
    "model.hidden=8",
    "critic.hidden=8",
    "discriminator.hidden=8",
    "k_critic=2",
    "batch_size=4",
    "quality_n=8",
    "data.stride=4",
];

fn synth(dir: &Path) {
    let out = run_cli(&["synth", "--out", s(dir), "--sequences", "3", "--frames", "16", "--joints", "3", "--seed", "2"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

fn train(data: &Path, run: &Path) {
    let mut args = vec!["train", "--data", s(data), "--out", s(run), "--epochs", "2", "--seed", "5"];
    args.extend_from_slice(TINY);
    let out = run_cli(&args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn end_to_end_pipeline() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    let run = tmp.path().join("run");
    synth(&data);
    assert_eq!(std::fs::read_dir(&data).unwrap().count(), 3);
    train(&data, &run);
    for f in ["best.ckpt.json", "final.ckpt.json", "losses.csv", "quality.csv"] {
        assert!(run.join(f).is_file(), "missing {f}");
    }
    let losses = std::fs::read_to_string(run.join("losses.csv")).unwrap();
    assert!(losses.lines().count() > 1);

    let ckpt = run.join("best.ckpt.json");
    let input = data.join("seq_0000.json");
    let preds = tmp.path().join("pred");
    let out = run_cli(&[
        "predict", "--checkpoint", s(&ckpt), "--input", s(&input), "--num-futures", "3", "--frames", "4", "--out", s(&preds),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for f in 0..3 {
        let json = std::fs::read_to_string(preds.join(format!("future_{f:03}.json"))).unwrap();
        let seq = motion_gan::skeleton::parse_canonical_json(&json).unwrap();
        assert_eq!(seq.frames().len(), 4);
        let svg = std::fs::read_to_string(preds.join(format!("future_{f:03}.svg"))).unwrap();
        assert!(svg.starts_with("<svg"));
    }

    // score needs exactly m + n = 5 frames.
    let seq = motion_gan::skeleton::parse_canonical_json(&std::fs::read_to_string(&input).unwrap()).unwrap();
    let five = motion_gan::skeleton::SkeletonSequence::new(seq.topology().clone(), seq.frames()[..5].to_vec(), 1, "cut").unwrap();
    let five_path = tmp.path().join("five.json");
    std::fs::write(&five_path, motion_gan::skeleton::to_canonical_json(&five)).unwrap();
    let out = run_cli(&["score", "--checkpoint", s(&ckpt), "--input", s(&five_path)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let p: f64 = String::from_utf8_lossy(&out.stdout).trim().parse().unwrap();
    assert!(p > 0.0 && p < 1.0);

    let out = run_cli(&["score", "--checkpoint", s(&ckpt), "--input", s(&input)]);
    assert_eq!(out.status.code(), Some(2), "16 frames is not m + n");

    let chart = tmp.path().join("losses.svg");
    let out = run_cli(&["plot", "--losses", s(&run.join("losses.csv")), "--out", s(&chart)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(std::fs::read_to_string(chart).unwrap().contains("<polyline"));
}

#[test]
fn usage_errors_exit_one() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    synth(&data);
    let out = run_cli(&["train", "--data", s(&data), "--epochs", "0"]);
    assert_eq!(out.status.code(), Some(1));
    let out = run_cli(&["train", "--data", s(&data), "no_such_key=3"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("no_such_key"));
    let out = run_cli(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn bad_config_file_reports_line() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    synth(&data);
    let conf = tmp.path().join("bad.conf");
    std::fs::write(&conf, "preset = desk\nepochs three\n").unwrap();
    let out = run_cli(&["train", "--data", s(&data), "--config", s(&conf)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));
}

#[test]
fn missing_or_malformed_data_exit_two() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run_cli(&["train", "--data", s(&tmp.path().join("absent"))]);
    assert_eq!(out.status.code(), Some(2));
    let bad = tmp.path().join("bad.json");
    std::fs::write(&bad, "{not json").unwrap();
    let out = run_cli(&["train", "--data", s(&bad)]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn shipped_desk_config_parses() {
    let text = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/configs/desk.conf")).unwrap();
    let pairs = motion_gan::cli::parse_config_text(&text).unwrap();
    let cfg = motion_gan::trainer::TrainingConfig::from_pairs(pairs.iter().map(|(k, v)| (k.as_str(), v.as_str()))).unwrap();
    assert_eq!((cfg.m, cfg.n, cfg.z_dim, cfg.hidden, cfg.batch_size, cfg.k_critic), (10, 10, 16, 64, 16, 10));
}
