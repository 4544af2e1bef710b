use std::path::PathBuf;
use std::process::{Command, Output};

fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures")
}

fn sbrs(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sbrs")).args(args).output().expect("binary runs")
}

fn fx(rel: &str) -> String {
    fixtures().join(rel).display().to_string()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn temp_file(dir: &tempfile::TempDir, name: &str, text: &str) -> String {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p.display().to_string()
}

#[test]
fn check_model() {
    let o = sbrs(&["check", &fx("shutdown.big")]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("1 rule"));
}

#[test]
fn check_failures() {
    let dir = tempfile::tempdir().unwrap();
    let bad = temp_file(&dir, "bad.big", "ctrl A = 0;\nreact r = A.(s) --> A.(t);\n");
    let o = sbrs(&["check", &bad]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("`t`"));
    assert_eq!(code(&sbrs(&["check", "no/such/file.big"])), 2);
    let quiet = sbrs(&["--quiet", "check", &bad]);
    assert_eq!(code(&quiet), 1);
    assert!(quiet.stderr.is_empty());
}

#[test]
fn match_counts() {
    let o = sbrs(&["match", &fx("shutdown.big"), "--agent", "room", "--redex", "shutdown_nodes"]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout(&o).lines().next(), Some("2"));
    assert_eq!(stdout(&o).lines().count(), 3);

    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(fixtures().join("shutdown.big")).unwrap() + "\nbig nothing = ();\n";
    let m = temp_file(&dir, "m.big", &text);
    assert_eq!(stdout(&sbrs(&["match", &m, "--agent", "nothing", "--redex", "shutdown_nodes"])), "0\n");
    assert_eq!(code(&sbrs(&["match", &m, "--agent", "room", "--redex", "nope"])), 2);
}

#[test]
fn run_traces() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.jsonl");
    let b = dir.path().join("b.jsonl");
    for p in [&a, &b] {
        let o = sbrs(&["run", &fx("shutdown.big"), "--trace", p.to_str().unwrap()]);
        assert_eq!(code(&o), 0);
    }
    let text = std::fs::read_to_string(&a).unwrap();
    assert_eq!(text, std::fs::read_to_string(&b).unwrap());
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[0].contains("\"rule\":\"shutdown_nodes\""));
    assert!(lines[1].contains("\"reason\":\"quiescent\""));

    let zero = stdout(&sbrs(&["run", &fx("shutdown.big"), "--max-steps", "0"]));
    assert_eq!(zero.lines().count(), 1);
    assert!(zero.contains("\"reason\":\"max_steps\""));
}

#[test]
fn names_table() {
    let o = sbrs(&["names", &fx("office_scan.json")]);
    assert_eq!(code(&o), 0);
    let out = stdout(&o);
    assert!(out.lines().any(|l| l == "projector.room-a.floor-1.building-1"));
    let mut sorted: Vec<&str> = out.lines().collect();
    sorted.sort();
    assert_eq!(sorted, out.lines().collect::<Vec<_>>());

    let dir = tempfile::tempdir().unwrap();
    let lone = temp_file(&dir, "lone.json", r#"{"root":{"label":"hq","category":"building"}}"#);
    assert_eq!(stdout(&sbrs(&["names", &lone])), "hq\n");
    let bad = temp_file(&dir, "bad.json", r#"{"root":{"label":"hq","category":"castle"}}"#);
    assert_eq!(code(&sbrs(&["names", &bad])), 1);
}

#[test]
fn simulate_writes_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let o = sbrs(&["simulate", &fx("scenarios/meeting-room"), "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("\"audit_ok\":true"));
    let trace = std::fs::read_to_string(out.join("trace.jsonl")).unwrap();
    assert!(trace.contains("\"rule\":\"shutdown_nodes\""));
    assert!(out.join("audit.jsonl").exists());
}

fn copy_bundle(name: &str, to: &std::path::Path) {
    std::fs::create_dir_all(to).unwrap();
    for f in std::fs::read_dir(fixtures().join("scenarios").join(name)).unwrap() {
        let f = f.unwrap();
        std::fs::copy(f.path(), to.join(f.file_name())).unwrap();
    }
}

#[test]
fn simulate_bad_bundles() {
    let dir = tempfile::tempdir().unwrap();
    let bundle = dir.path().join("forged");
    copy_bundle("two-users", &bundle);
    let agents = std::fs::read_to_string(bundle.join("agents.json")).unwrap();
    let forged = agents.replacen("\"threshold\": 0.5}", "\"threshold\": 0.5, \"secret_override\": \"00ff\"}", 1);
    assert_ne!(agents, forged);
    std::fs::write(bundle.join("agents.json"), forged).unwrap();
    let out = dir.path().join("out");
    let o = sbrs(&["simulate", bundle.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let trace = std::fs::read_to_string(out.join("trace.jsonl")).unwrap();
    assert!(trace.contains("\"kind\":\"bad_signature\""));

    std::fs::remove_file(bundle.join("schemas.json")).unwrap();
    assert_eq!(code(&sbrs(&["simulate", bundle.to_str().unwrap(), "--out", out.to_str().unwrap()])), 2);

    copy_bundle("two-users", &bundle);
    std::fs::write(bundle.join("agents.json"), r#"{"agents": []}"#).unwrap();
    assert_eq!(code(&sbrs(&["simulate", bundle.to_str().unwrap(), "--out", out.to_str().unwrap()])), 1);
}

#[test]
fn export_dot() {
    let o = sbrs(&["export-dot", &fx("office_scan.json")]);
    assert_eq!(code(&o), 0);
    let golden = include_str!("golden/office.dot");
    assert_eq!(stdout(&o), golden);

    let dir = tempfile::tempdir().unwrap();
    let empty = temp_file(&dir, "e.big", "ctrl A = 0;\nbig e = ();\n");
    assert_eq!(stdout(&sbrs(&["export-dot", &empty])), "digraph bigraph {\n}\n");
    let junk = temp_file(&dir, "junk.big", "ctrl = ;");
    assert_eq!(code(&sbrs(&["export-dot", &junk])), 1);
    let from_model = stdout(&sbrs(&["export-dot", &fx("shutdown.big")]));
    assert_eq!(from_model.matches("[shape=point]").count(), 2);
}

#[test]
fn version_and_usage() {
    let o = sbrs(&["--version"]);
    assert_eq!(code(&o), 0);
    assert!(o.stdout.is_empty());
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("sbrs "));
    assert_eq!(code(&sbrs(&["frobnicate"])), 2);
    assert_eq!(code(&sbrs(&[])), 2);
}
