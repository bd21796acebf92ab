use std::io::Write;
use std::path::PathBuf;
use std::process::{Command, Output, Stdio};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ctxdecode"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn run_stdin(args: &[&str], input: &str) -> Output {
    let mut child = bin()
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .expect("binary runs");
    child.stdin.take().unwrap().write_all(input.as_bytes()).unwrap();
    child.wait_with_output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn manifest() -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../data/synthetic_manifest.jsonl")
        .to_str()
        .unwrap()
        .to_string()
}

/// Report body without the comment header (the config digest depends on paths).
fn table(o: &Output) -> Vec<String> {
    stdout(o)
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(str::to_string)
        .collect()
}

#[test]
fn version_and_usage_errors() {
    let v = run(&["--version"]);
    assert!(v.status.success());
    assert_eq!(stdout(&v).trim(), format!("ctxdecode {}", env!("CARGO_PKG_VERSION")));
    assert_eq!(run(&["--bogus"]).status.code(), Some(2));
    assert_eq!(run(&["eval"]).status.code(), Some(2));
    assert_eq!(
        run(&["eval", "--manifest", "/nonexistent.jsonl"]).status.code(),
        Some(1)
    );
}

#[test]
fn help_json_lists_every_command() {
    let o = run(&["--help-json"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let names: Vec<&str> = v["subcommands"]
        .as_array()
        .unwrap()
        .iter()
        .map(|s| s["name"].as_str().unwrap())
        .collect();
    for cmd in [
        "normalize",
        "score",
        "index",
        "prompt",
        "prefix",
        "rerank",
        "eval",
        "sweep-beam",
        "sweep-alpha",
        "synth",
        "fetch",
    ] {
        assert!(names.contains(&cmd), "{cmd} missing from {names:?}");
    }
}

#[test]
fn normalize_reads_stdin() {
    let o = run_stdin(&["normalize"], "  قالَ أحمدُ: «إنّ الكتـــاب هنا» OK؟ \n٩٢%\n");
    assert!(o.status.success());
    assert_eq!(stdout(&o), "قال احمد ان الكتاب هنا\n92%\n");
}

#[test]
fn score_csv() {
    let dir = tempfile::tempdir().unwrap();
    let (h, r) = (dir.path().join("h.txt"), dir.path().join("r.txt"));
    std::fs::write(&h, "ا ب ج\nس\n").unwrap();
    std::fs::write(&r, "ا د ج ه\nس\n").unwrap();
    let (h, r) = (h.to_str().unwrap(), r.to_str().unwrap());
    let o = run(&["score", "--hyp", h, "--ref", r]);
    assert_eq!(
        stdout(&o),
        "id,errors,ref_len,score\n1,2,4,50.0000\n2,0,1,0.0000\npooled,2,5,40.0000\n"
    );
    // BLEU of the first pair: (2/3 · 0.1/2.1 · 0.1/1.1 · 1)^(1/4) · exp(1 − 4/3)
    let o = run(&["score", "--metric", "bleu", "--hyp", h, "--ref", r]);
    assert_eq!(stdout(&o).lines().nth(1), Some("1,,,16.6077"));
    std::fs::write(dir.path().join("r.txt"), "ا\n").unwrap();
    assert_eq!(run(&["score", "--hyp", h, "--ref", r]).status.code(), Some(2));
}

#[test]
fn eval_golden_on_shipped_manifest() {
    let m = manifest();
    let o = run(&["eval", "--manifest", &m, "--proxy", "proxy_a"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(
        table(&o),
        [
            "beam,policy,utterances,word_errors,ref_words,wer,char_errors,ref_chars,cer",
            "full,top1,1000,1985,9525,20.8399,8942,46009,19.4353",
            "full,nearest:proxy_a,1000,514,9525,5.3963,2382,46009,5.1772",
            "full,oracle,1000,353,9525,3.7060,1624,46009,3.5297",
        ]
    );
    assert!(stdout(&o).starts_with("# kind=eval\n# config_digest="));
}

#[test]
fn eval_json_carries_run_config() {
    let m = manifest();
    let o = run(&[
        "--seed",
        "3",
        "eval",
        "--manifest",
        &m,
        "--proxy",
        "proxy_b",
        "--beam",
        "4",
        "--format",
        "json",
        "--policy",
        "oracle",
    ]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["run_config"]["seed"], 3);
    assert_eq!(v["report"]["policy_rows"].as_array().unwrap().len(), 1);
    assert_eq!(v["report"]["policy_rows"][0]["beam"], "4");
}

#[test]
fn sweeps_produce_expected_shapes() {
    let m = manifest();
    let o = run(&["sweep-beam", "--manifest", &m, "--proxy", "proxy_a", "--beams", "2-10"]);
    assert!(o.status.success());
    assert_eq!(table(&o).len(), 1 + 9 * 3);
    let o = run(&["sweep-alpha", "--manifest", &m, "--p1", "proxy_a", "--p2", "proxy_b"]);
    assert!(o.status.success());
    let rows = table(&o);
    assert_eq!(rows.len(), 1 + 11);
    assert!(rows[11].starts_with("1.0000,1000,514,"));
    assert!(rows[11].ends_with(",0.0000"));
    assert_eq!(
        run(&["sweep-alpha", "--manifest", &m, "--p1", "proxy_a", "--p2", "proxy_a"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn rerank_missing_proxy_is_invalid_input() {
    let m = manifest();
    let o = run(&["rerank", "--manifest", &m, "--proxy", "nope"]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["rerank", "--manifest", &m, "--proxy", "proxy_a", "--beam", "3"]);
    assert!(o.status.success());
    let first: serde_json::Value = serde_json::from_str(stdout(&o).lines().next().unwrap()).unwrap();
    assert_eq!(first["id"], "syn-0000");
    assert!(first["chosen_rank"].as_u64().unwrap() <= 3);
}

#[test]
fn synth_regenerates_shipped_manifest() {
    let o = run(&["--seed", "0", "synth", "--utterances", "1000"]);
    assert!(o.status.success());
    assert!(o.stdout == std::fs::read(manifest()).unwrap());
}
