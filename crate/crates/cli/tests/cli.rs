use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

fn bench_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures/bench")
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_iconforge"))
        .args(args)
        .env_remove("ICONFORGE_LLM_ENDPOINT")
        .output()
        .expect("binary runs")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn render_writes_png() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("lamp.png");
    let o = run(&["render", s(&data("toy_lamp.json")), "-o", s(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let bytes = std::fs::read(&out).unwrap();
    assert_eq!(&bytes[1..4], b"PNG");
}

#[test]
fn render_svg_and_size() {
    let dir = tempfile::tempdir().unwrap();
    let svg = dir.path().join("lamp.svg");
    let o = run(&["render", s(&data("toy_lamp.json")), "-o", s(&svg)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = std::fs::read_to_string(&svg).unwrap();
    assert_eq!(text.matches("<path").count(), 5);
    let png = dir.path().join("small.png");
    let o = run(&["render", s(&data("toy_lamp.json")), "-o", s(&png), "--size", "128x96"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let img = iconforge::raster::RgbImage::read_png(&png).unwrap();
    assert_eq!((img.width, img.height), (128, 96));
}

#[test]
fn edit_with_program_logs_trace() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out.png");
    let motions = dir.path().join("m.json");
    let o = run(&[
        "edit",
        s(&data("toy_lamp.json")),
        "--program",
        s(&data("touch.icp")),
        "-o",
        s(&out),
        "--motions-out",
        s(&motions),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let log = stderr(&o);
    assert!(log.contains("relation") && log.contains("motion") && log.contains("score"), "{log}");
    assert!(out.exists());
    let doc: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&motions).unwrap()).unwrap();
    let shade = &doc["motions"][0];
    assert!(shade["ty"].as_f64().unwrap() > 100.0, "{doc}");
    assert_eq!(doc["motions"][4]["tx"].as_f64(), Some(0.0));
}

#[test]
fn missing_scene_is_a_domain_error() {
    let o = run(&["solve", "missing.json", "p.icp"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("missing.json"));
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(run(&["render", "--frobnicate"]).status.code(), Some(2));
    assert_eq!(run(&["nonsense"]).status.code(), Some(2));
    let o = run(&["render", s(&data("toy_lamp.json")), "-o", "out.gif"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains(".png or .svg"));
    assert_eq!(run(&["edit", s(&data("toy_lamp.json")), "-o", "x.png"]).status.code(), Some(2));
}

#[test]
fn request_without_endpoint_points_to_program_flag() {
    let o = run(&["edit", s(&data("toy_lamp.json")), "--request", "move the shade", "-o", "x.png"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("--program"), "{}", stderr(&o));
}

#[test]
fn solve_then_eval_against_ground_truth() {
    let dir = tempfile::tempdir().unwrap();
    let m = dir.path().join("m.json");
    let b = bench_dir();
    let o = run(&["solve", s(&b.join("lamp3.json")), s(&b.join("shift_shade.icp")), "-o", s(&m), "--trace"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stderr(&o).contains("accepted"));
    for metric in ["cd", "mse"] {
        let o = run(&["eval", s(&m), s(&b.join("shift_shade.gt.json")), "--scene", s(&b.join("lamp3.json")), "--metric", metric]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        let v: f64 = String::from_utf8_lossy(&o.stdout).trim().parse().unwrap();
        assert!(v < if metric == "cd" { 0.01 } else { 50.0 }, "{metric} {v}");
    }
    let o = run(&["eval", s(&data("toy_lamp.json")), s(&data("toy_lamp.json"))]);
    assert_eq!(String::from_utf8_lossy(&o.stdout).trim(), "0");
}

#[test]
fn validate_and_relations() {
    let o = run(&["validate", s(&data("toy_lamp.json")), s(&data("touch.icp"))]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(String::from_utf8_lossy(&o.stdout).contains("touch(seg0, seg4)"));
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.icp");
    std::fs::write(&bad, "translate(seg9)\n").unwrap();
    assert_eq!(run(&["validate", s(&data("toy_lamp.json")), s(&bad)]).status.code(), Some(1));
    let o = run(&["relations", s(&data("toy_lamp.json")), "--json"]);
    let edges: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(edges.as_array().unwrap().len(), 4);
}

#[test]
fn config_file_and_bad_key() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.cfg");
    std::fs::write(&cfg, "exec = sequential\nsearch.budget = 50\n").unwrap();
    let o = run(&["--config", s(&cfg), "relations", s(&data("toy_lamp.json"))]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    std::fs::write(&cfg, "search.budgte = 50\n").unwrap();
    let o = run(&["--config", s(&cfg), "relations", s(&data("toy_lamp.json"))]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("search.budgte"));
}

#[test]
fn repeated_edits_are_identical() {
    let dir = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for k in 0..2 {
        let png = dir.path().join(format!("{k}.png"));
        let m = dir.path().join(format!("{k}.json"));
        let o = run(&[
            "--seed",
            "7",
            "-q",
            "edit",
            s(&data("toy_lamp.json")),
            "--program",
            s(&data("touch.icp")),
            "-o",
            s(&png),
            "--motions-out",
            s(&m),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        outputs.push((std::fs::read(&png).unwrap(), std::fs::read(&m).unwrap()));
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn bench_prints_table_and_json() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = dir.path().join("m.toml");
    let b = bench_dir();
    std::fs::write(
        &manifest,
        format!(
            "[[case]]\nname = \"shade\"\nscene = \"{}\"\nprogram = \"{}\"\ngt_motions = \"{}\"\n",
            s(&b.join("lamp3.json")),
            s(&b.join("shift_shade.icp")),
            s(&b.join("shift_shade.gt.json"))
        ),
    )
    .unwrap();
    let json = dir.path().join("r.json");
    let o = run(&["-q", "bench", s(&manifest), "--ablations", "--json", s(&json)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = String::from_utf8_lossy(&o.stdout);
    assert!(out.contains("no relation search") && out.contains("shade"), "{out}");
    let doc: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
    assert_eq!(doc["reports"].as_array().unwrap().len(), 3);
}
