use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_deltom");

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn gen(dir: &Path, seed: &str, count: &str) {
    ok(&["gen", "--seed", seed, "--count", count, "--out", dir.to_str().unwrap()]);
}

fn read_dir_sorted(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect();
    out.sort();
    out
}

#[test]
fn gen_is_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b, c) = (tmp.path().join("a"), tmp.path().join("b"), tmp.path().join("c"));
    gen(&a, "5", "30");
    gen(&b, "5", "30");
    gen(&c, "6", "30");
    assert_eq!(fs::read(a.join("stories.jsonl")).unwrap(), fs::read(b.join("stories.jsonl")).unwrap());
    // manifests differ only in the echoed output path
    let manifest = |d: &Path| {
        let mut m: serde_json::Value = serde_json::from_str(&fs::read_to_string(d.join("manifest.json")).unwrap()).unwrap();
        m["config"]["out"].take();
        m
    };
    assert_eq!(manifest(&a), manifest(&b));
    assert_eq!(read_dir_sorted(&a.join("prompts")), read_dir_sorted(&b.join("prompts")));
    assert_ne!(fs::read(a.join("stories.jsonl")).unwrap(), fs::read(c.join("stories.jsonl")).unwrap());

    let stories = fs::read_to_string(a.join("stories.jsonl")).unwrap();
    assert_eq!(stories.lines().count(), 30);
    assert_eq!(fs::read_dir(a.join("prompts")).unwrap().count(), 150);
    let first: serde_json::Value = serde_json::from_str(stories.lines().next().unwrap()).unwrap();
    assert_eq!(first["id"], 0);
    let prompt = fs::read_to_string(a.join("prompts/000000_o3.txt")).unwrap();
    assert!(prompt.ends_with("<trace>\n"));
}

#[test]
fn outputs_are_write_once() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path().join("g");
    gen(&d, "1", "3");
    let again = run(&["gen", "--seed", "1", "--count", "3", "--out", d.to_str().unwrap()]);
    assert_eq!(again.status.code(), Some(3));
    ok(&["gen", "--seed", "1", "--count", "3", "--out", d.to_str().unwrap(), "--force"]);
}

#[test]
fn bad_arguments_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("x.csv");
    let out = out.to_str().unwrap();
    assert_eq!(run(&["analyze", "--grid", "q=1.5", "--trials", "10", "--out", out]).status.code(), Some(2));
    assert_eq!(run(&["analyze", "--grid", "Z=1", "--out", out]).status.code(), Some(2));

    let d = tmp.path().join("g");
    gen(&d, "1", "2");
    let stories = d.join("stories.jsonl");
    let s = stories.to_str().unwrap();
    let scale_out = tmp.path().join("s");
    let so = scale_out.to_str().unwrap();
    assert_eq!(run(&["scale", "--stories", s, "--verifier", "oracle", "--out", so]).status.code(), Some(2));
    assert_eq!(run(&["scale", "--stories", s, "--N", "0", "--out", so]).status.code(), Some(2));
    assert_eq!(run(&["scale", "--stories", s, "--rule", "median", "--out", so]).status.code(), Some(2));

    let cfg = tmp.path().join("cfg.json");
    fs::write(&cfg, r#"{"story": {"num_agents": 1}}"#).unwrap();
    let gd = tmp.path().join("g2");
    let code = run(&["--config", cfg.to_str().unwrap(), "gen", "--count", "1", "--out", gd.to_str().unwrap()])
        .status
        .code();
    assert_eq!(code, Some(2));
}

#[test]
fn missing_input_exits_3() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("s");
    let code = run(&["scale", "--stories", "/nonexistent/stories.jsonl", "--out", out.to_str().unwrap()])
        .status
        .code();
    assert_eq!(code, Some(3));
}

#[test]
fn sample_then_verify() {
    let tmp = tempfile::tempdir().unwrap();
    let g = tmp.path().join("g");
    gen(&g, "2", "10");
    let stories = g.join("stories.jsonl");
    let s = tmp.path().join("s");
    ok(&[
        "sample",
        "--stories",
        stories.to_str().unwrap(),
        "--generator",
        "scripted:q=1.0",
        "--n",
        "2",
        "--out",
        s.to_str().unwrap(),
    ]);
    let traces = fs::read_to_string(s.join("traces.jsonl")).unwrap();
    assert_eq!(traces.lines().count(), 10 * 5 * 2);

    let v = tmp.path().join("v");
    let table = ok(&[
        "verify",
        "--stories",
        stories.to_str().unwrap(),
        "--traces",
        s.join("traces.jsonl").to_str().unwrap(),
        "--out",
        v.to_str().unwrap(),
    ]);
    assert!(table.contains("100.0"));
    let dataset = fs::read_to_string(v.join("dataset.jsonl")).unwrap();
    assert_eq!(dataset.lines().count(), 100);
    for line in dataset.lines() {
        let rec: serde_json::Value = serde_json::from_str(line).unwrap();
        assert!(rec["step_labels"].as_array().unwrap().iter().all(|l| l == 1));
    }
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn scale_with_one_sample_matches_majority() {
    let tmp = tempfile::tempdir().unwrap();
    let g = tmp.path().join("g");
    gen(&g, "3", "8");
    let out = tmp.path().join("s");
    ok(&[
        "scale",
        "--stories",
        g.join("stories.jsonl").to_str().unwrap(),
        "--N",
        "1",
        "--verifier",
        "noisy8b",
        "--generator",
        "scripted:q=0.7",
        "--out",
        out.to_str().unwrap(),
    ]);
    let rows = csv_rows(&out.join("results.csv"));
    // 40 questions x (8 best-of-N arms + majority)
    assert_eq!(rows.len(), 40 * 9);
    for q in rows.chunks(9) {
        let chosen: Vec<&str> = q.iter().map(|r| r[4].as_str()).collect();
        assert!(chosen.iter().all(|c| *c == chosen[0]), "{q:?}");
    }
    let manifest: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["questions"], 40);
}

#[test]
fn beam_with_exact_verifier() {
    let tmp = tempfile::tempdir().unwrap();
    let g = tmp.path().join("g");
    gen(&g, "4", "6");
    let out = tmp.path().join("s");
    let table = ok(&[
        "scale",
        "--stories",
        g.join("stories.jsonl").to_str().unwrap(),
        "--method",
        "beam",
        "--k",
        "4",
        "--b",
        "4",
        "--verifier",
        "exact",
        "--generator",
        "scripted:q=0.8",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(table.contains("beam/newest"));
    let rows = csv_rows(&out.join("results.csv"));
    assert_eq!(rows.len(), 30);
    assert!(rows.iter().all(|r| r[2] == "beam"));
}

#[test]
fn analyze_writes_grid() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("a.csv");
    ok(&[
        "analyze",
        "--grid",
        "q=0.6,0.9;K=2;N=4,16;L=5",
        "--trials",
        "2000",
        "--out",
        out.to_str().unwrap(),
    ]);
    let text = fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "q,K,N,L,trials,a_pbm_closed,a_pbm_mc,a_pbm_se,a_maj_mc,a_maj_se"
    );
    assert_eq!(lines.count(), 4);
}
