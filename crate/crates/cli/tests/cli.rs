use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use ubg_spanner::geometry::{validate_instance, UbgInstance};
use ubg_spanner::verify::check_spanner;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ubg-spanner"))
}

fn run(args: &[&str], dir: &Path) -> Output {
    bin().args(args).current_dir(dir).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn gen(dir: &Path, name: &str, n: usize, seed: u64) {
    let out = run(
        &["gen", "--n", &n.to_string(), "--alpha", "0.7", "--seed", &seed.to_string(), "--out", name],
        dir,
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
}

fn edges_of(path: &Path) -> Vec<(usize, usize)> {
    let v: Value = serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap();
    serde_json::from_value(v["edges"].clone()).unwrap()
}

#[test]
fn gen_single_node_has_no_edges() {
    let dir = tempfile::tempdir().unwrap();
    gen(dir.path(), "one.json", 1, 0);
    let inst = UbgInstance::read(dir.path().join("one.json")).unwrap();
    assert_eq!(inst.n(), 1);
    assert!(inst.edges.is_empty());
}

#[test]
fn gen_is_byte_identical_and_valid() {
    let dir = tempfile::tempdir().unwrap();
    gen(dir.path(), "a.json", 100, 7);
    gen(dir.path(), "b.json", 100, 7);
    let a = fs::read(dir.path().join("a.json")).unwrap();
    assert_eq!(a, fs::read(dir.path().join("b.json")).unwrap());
    let inst = UbgInstance::read(dir.path().join("a.json")).unwrap();
    assert!(validate_instance(&inst).is_valid());
}

#[test]
fn bad_flags_are_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    assert_eq!(code(&run(&["gen", "--n", "10", "--alpha", "1.5", "--out", "x.json"], p)), 2);
    assert_eq!(code(&run(&["gen", "--n", "10", "--policy", "bernoulli:2", "--out", "x.json"], p)), 2);
    assert_eq!(code(&run(&["gen", "--out", "x.json"], p)), 2);
    gen(p, "i.json", 20, 1);
    let out = run(&["run", "--algo", "relaxed", "--t", "0.9", "--input", "i.json", "--out", "s.json"], p);
    assert_eq!(code(&out), 2);
    assert!(!p.join("s.json").exists());
    assert_eq!(code(&run(&["run", "--algo", "nope", "--t", "1.5", "--input", "i.json", "--out", "s.json"], p)), 2);
}

#[test]
fn every_engine_writes_a_certified_spanner() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    gen(p, "i.json", 100, 7);
    let inst = UbgInstance::read(p.join("i.json")).unwrap();
    for (algo, t) in [("seq-greedy", "1"), ("relaxed", "1.5"), ("dist", "1.5")] {
        let out_name = format!("{algo}.json");
        let out = run(
            &["run", "--algo", algo, "--t", t, "--input", "i.json", "--out", &out_name, "--report", "r.json"],
            p,
        );
        assert_eq!(code(&out), 0, "{algo}: {}", String::from_utf8_lossy(&out.stderr));
        let edges = edges_of(&p.join(&out_name));
        assert!(check_spanner(&inst, &edges, t.parse().unwrap()).unwrap().pass, "{algo}");
        let report: Value = serde_json::from_str(&fs::read_to_string(p.join("r.json")).unwrap()).unwrap();
        assert_eq!(report["stretch"]["pass"], true);
    }
    let tr: Value = serde_json::from_str(&fs::read_to_string(p.join("dist.transcript.json")).unwrap()).unwrap();
    for key in ["rounds_total", "rounds_by_step", "max_payload_words", "edges"] {
        assert!(tr.get(key).is_some(), "transcript lacks {key}");
    }
    let by_step: u64 = tr["rounds_by_step"].as_object().unwrap().values().map(|v| v.as_u64().unwrap()).sum();
    assert_eq!(by_step, tr["rounds_total"].as_u64().unwrap());
}

#[test]
fn model_violation_exits_one_and_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    gen(p, "i.json", 30, 2);
    let mut inst = UbgInstance::read(p.join("i.json")).unwrap();
    // node 0 keeps its edges but moves far away, so they are longer than 1
    inst.points[0].0[0] += 5.0;
    inst.write(p.join("bad.json")).unwrap();
    let out = run(&["run", "--algo", "relaxed", "--t", "1.5", "--input", "bad.json", "--out", "s.json"], p);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("model violation"));
    assert!(!p.join("s.json").exists());
}

#[test]
fn bench_single_cell_is_one_row() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    let out = run(&["bench", "--sizes", "40", "--seeds", "1", "--out", "b.csv"], p);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(p.join("b.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(
        lines[0],
        "size,seed,algo,t,max_degree,weight_ratio,rounds_total,rounds_nonempty_phases,phases,ms_elapsed"
    );
    assert_eq!(lines.len(), 2);
    assert!(lines[1].starts_with("40,1,dist,1.5,"));
    assert!(lines[1].ends_with(','), "wall time stays blank unless asked for");
}

#[test]
fn repeated_commands_give_identical_files() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    gen(p, "i.json", 60, 3);
    for round in ["a", "b"] {
        for algo in ["seq-greedy", "relaxed", "dist"] {
            let out = run(
                &[
                    "run", "--algo", algo, "--t", "1.5", "--input", "i.json",
                    "--out", &format!("{algo}-{round}.json"),
                    "--report", &format!("{algo}-{round}.report.json"),
                ],
                p,
            );
            assert_eq!(code(&out), 0);
        }
        let out = run(
            &["bench", "--sizes", "30,40", "--seeds", "2", "--out", &format!("bench-{round}.csv"), "--medians", &format!("med-{round}.csv")],
            p,
        );
        assert_eq!(code(&out), 0);
    }
    let mut names: Vec<String> = fs::read_dir(p)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .filter(|n| n.contains("-a."))
        .collect();
    names.sort();
    assert_eq!(names.len(), 9, "{names:?}");
    for a in names {
        let b = a.replace("-a.", "-b.");
        assert_eq!(fs::read(p.join(&a)).unwrap(), fs::read(p.join(&b)).unwrap(), "{a} vs {b}");
    }
}
