mod common;

use common::fixture;
use shopfloor::cli::main_with_args;

fn run(args: &[&str]) -> (i32, String, String) {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let argv = std::iter::once("shopfloor").chain(args.iter().copied());
    let code = main_with_args(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn task_path() -> String {
    fixture("conveyor_pallets.json").display().to_string()
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(run(&[]).0, 1);
    assert_eq!(run(&["frobnicate"]).0, 1);
    assert_eq!(run(&["solve"]).0, 1);
    assert_eq!(run(&["gantt", "--task", "x.json", "--format", "png"]).0, 1);
    assert_eq!(run(&["--help"]).0, 0);
}

#[test]
fn task_file_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.json");
    let (code, _, err) = run(&["solve", "--task", missing.to_str().unwrap()]);
    assert_eq!(code, 2);
    assert!(!err.is_empty());

    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\"scene\": 3}").unwrap();
    assert_eq!(run(&["plan", "--task", bad.to_str().unwrap()]).0, 2);

    let tree = dir.path().join("tree.json");
    std::fs::write(&tree, "not json").unwrap();
    let (code, _, _) = run(&["assemble", "--task", &task_path(), "--tree", tree.to_str().unwrap()]);
    assert_eq!(code, 2);
}

#[test]
fn solve_prints_a_six_step_schedule() {
    for extra in [&[][..], &["--oracle"][..]] {
        let mut args = vec!["solve", "--task"];
        let path = task_path();
        args.push(&path);
        args.extend_from_slice(extra);
        let (code, out, _) = run(&args);
        assert_eq!(code, 0);
        let doc: serde_json::Value = serde_json::from_str(&out).unwrap();
        assert_eq!(doc["makespan"], 6);
    }
}

#[test]
fn single_task_commands_write_files() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let t = task_path();
    for args in [
        vec!["plan", "--task", &t, "--out-dir", d],
        vec!["assemble", "--task", &t, "--format", "script", "--out-dir", d],
        vec!["execute", "--task", &t, "--out-dir", d],
        vec!["evaluate", "--task", &t, "--out-dir", d],
        vec!["gantt", "--task", &t, "--format", "svg", "--out-dir", d],
    ] {
        let (code, _, err) = run(&args);
        assert_eq!(code, 0, "{args:?}: {err}");
    }
    for name in ["plan.json", "program.py", "trace.jsonl", "metrics.json", "gantt.svg"] {
        assert!(dir.path().join(format!("conveyor_pallets.{name}")).exists(), "{name}");
    }
    let metrics: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("conveyor_pallets.metrics.json")).unwrap())
            .unwrap();
    assert_eq!(metrics["sr"], 1);
}

#[test]
fn generate_then_run_suite() {
    let dir = tempfile::tempdir().unwrap();
    let suite = dir.path().join("suite");
    let out = dir.path().join("out");
    let (s, o) = (suite.to_str().unwrap(), out.to_str().unwrap());
    assert_eq!(run(&["generate", "--tier", "all", "--count", "2", "--seed", "5", "--out-dir", s]).0, 0);
    assert_eq!(std::fs::read_dir(&suite).unwrap().count(), 6);

    let (code, _, err) = run(&["run", "--suite", s, "--planner", "wrong-robot", "--out-dir", o]);
    assert_eq!(code, 0, "{err}");
    let csv = std::fs::read_to_string(out.join("suite.csv")).unwrap();
    assert!(csv.starts_with("task_id,tier,oc,se,exe,gcr,sr\n"));
    assert_eq!(csv.lines().count(), 7);

    let empty = dir.path().join("empty");
    std::fs::create_dir(&empty).unwrap();
    assert_eq!(run(&["evaluate", "--suite", empty.to_str().unwrap()]).0, 1);
}
