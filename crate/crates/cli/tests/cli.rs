use std::path::Path;
use std::process::{Command, Output};

fn setmatch(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_setmatch"))
        .args(args)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

const HEADER: &str =
    "step,loss_total,loss_assign,loss_background,loss_class,loss_box,mean_matched_iou,class_accuracy,degeneracy_rate";

#[test]
fn match_prints_cost_and_mapping() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "c.txt", "# example\n3 2\n5 9\n1 3\n2 2\n");
    let o = setmatch(&["match", &f]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "cost 3\n0 1\n1 2\n");

    let f = write(dir.path(), "one.txt", "1 1\n7\n");
    assert_eq!(stdout(&setmatch(&["match", &f])), "cost 7\n0 0\n");
}

#[test]
fn match_rejects_bad_files() {
    let dir = tempfile::tempdir().unwrap();
    let wide = write(dir.path(), "wide.txt", "2 3\n1 2 3\n4 5 6\n");
    let o = setmatch(&["match", &wide]);
    assert_eq!(o.status.code(), Some(1));
    assert!(
        stderr(&o).contains("more columns than rows"),
        "{}",
        stderr(&o)
    );

    let bad = write(dir.path(), "bad.txt", "2 2\n1 2\n# note\n1 x\n");
    let o = setmatch(&["match", &bad]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("line 4"), "{}", stderr(&o));

    let o = setmatch(&["match", "/nonexistent/cost.txt"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn train_writes_one_row_per_step() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("m.csv");
    let o = setmatch(&[
        "train",
        "--steps",
        "10",
        "--seed",
        "7",
        "--batch-size",
        "4",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = std::fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 11);
    assert_eq!(lines[0], HEADER);
    assert!(lines[10].starts_with("10,"));
}

#[test]
fn train_defaults_to_stdout_and_is_deterministic() {
    let args = ["train", "--steps", "3", "--batch-size", "2", "--seed", "5"];
    let a = setmatch(&args);
    let b = setmatch(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(stdout(&a), stdout(&b));
    assert!(stdout(&a).starts_with(HEADER));
    assert_eq!(stdout(&a).lines().count(), 4);
}

#[test]
fn baseline_mode_has_the_same_schema() {
    let o = setmatch(&[
        "train",
        "--steps",
        "2",
        "--batch-size",
        "2",
        "--loss-mode",
        "baseline",
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).lines().next(), Some(HEADER));
    assert_eq!(stdout(&o).lines().count(), 3);
}

#[test]
fn config_file_and_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "t.cfg",
        "# small run\nsteps = 4\nbatch_size = 2  # tiny\nseed = 1\n",
    );
    let o = setmatch(&["train", "--config", &cfg]);
    assert_eq!(stdout(&o).lines().count(), 5);
    let o = setmatch(&["train", "--config", &cfg, "--steps", "2"]);
    assert_eq!(stdout(&o).lines().count(), 3);
}

#[test]
fn config_errors_name_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.cfg", "steps = 2\nwarmup = 10\n");
    let o = setmatch(&["train", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("warmup"), "{}", stderr(&o));

    let o = setmatch(&["train", "--learning-rate", "fast"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("learning_rate"), "{}", stderr(&o));

    let o = setmatch(&["train", "--steps", "0"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("steps"), "{}", stderr(&o));

    let o = setmatch(&["train", "--bogus-flag", "1"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn non_finite_loss_exits_2() {
    let o = setmatch(&[
        "train",
        "--steps",
        "2",
        "--batch-size",
        "2",
        "--lambda-class",
        "1e308",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(
        stderr(&o).contains("non-finite loss at step 1"),
        "{}",
        stderr(&o)
    );
}

#[test]
fn train_saves_params_and_evaluates() {
    let dir = tempfile::tempdir().unwrap();
    let params = dir.path().join("p.txt");
    let o = setmatch(&[
        "train",
        "--steps",
        "2",
        "--batch-size",
        "2",
        "--eval-scenes",
        "5",
        "--save-params",
        params.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stderr(&o).contains("mean_matched_iou="));
    let text = std::fs::read_to_string(params).unwrap();
    assert!(setmatch::ModelParams::from_text(&text).is_ok());
}

#[test]
fn gradcheck_reports_each_seed() {
    let o = setmatch(&["gradcheck", "--seeds", "4", "--size", "4,2,3"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let out = stdout(&o);
    let lines: Vec<&str> = out.lines().filter(|l| l.starts_with("seed=")).collect();
    assert_eq!(lines.len(), 4);
    for l in lines {
        for key in ["max_rel_err=", "degenerate=", "stable="] {
            assert!(l.contains(key), "{l}");
        }
    }
}

#[test]
fn gradcheck_rejects_bad_arguments() {
    assert_eq!(
        setmatch(&["gradcheck", "--seeds", "0"]).status.code(),
        Some(1)
    );
    assert_eq!(
        setmatch(&["gradcheck", "--size", "2,3,1"]).status.code(),
        Some(1)
    );
    assert_eq!(
        setmatch(&["gradcheck", "--size", "5,3"]).status.code(),
        Some(1)
    );
}

#[test]
fn degenerate_instance_is_flagged_not_failed() {
    // two identical slots and one target: swapping them costs nothing
    let dir = tempfile::tempdir().unwrap();
    let f = write(
        dir.path(),
        "tie.txt",
        "2 1 2\n0.5 -0.2 0.1 0.3 0.3 0.1 0.1\n0.5 -0.2 0.1 0.3 0.3 0.1 0.1\n0 0.5 0.5 0.2 0.2\n",
    );
    let o = setmatch(&["gradcheck", "--instance", &f]);
    assert_eq!(o.status.code(), Some(0), "{}{}", stdout(&o), stderr(&o));
    assert!(stdout(&o).contains("degenerate=true"), "{}", stdout(&o));
}

#[test]
fn selftest_passes_and_is_deterministic() {
    let a = setmatch(&["selftest"]);
    let b = setmatch(&["selftest"]);
    assert_eq!(a.status.code(), Some(0), "{}", stdout(&a));
    assert_eq!(stdout(&a), stdout(&b));
    let out = stdout(&a);
    for suite in [
        "oracle-equivalence",
        "decomposition-identity",
        "alignment",
        "padding-conformance",
    ] {
        assert!(out.contains(&format!("PASS {suite}")), "{out}");
    }
}

#[test]
fn selftest_catches_a_wrong_sign_cost() {
    let o = setmatch(&["selftest", "--inject-wrong-sign"]);
    assert_ne!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("FAIL alignment"), "{}", stdout(&o));
}

#[test]
fn help_exits_0() {
    assert_eq!(setmatch(&["--help"]).status.code(), Some(0));
    assert_eq!(setmatch(&["train", "--help"]).status.code(), Some(0));
    assert_eq!(setmatch(&[]).status.code(), Some(1));
}
