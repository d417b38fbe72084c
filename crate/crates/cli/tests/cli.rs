use std::path::Path;
use std::process::{Command, Output};

fn partfilter(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_partfilter")).args(args).output().expect("binary runs")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn kesten_gallery_is_nonstable_on_the_first_block() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("kesten.json");
    assert!(partfilter(&["gallery", "kesten", "--out", path(&model)]).status.success());
    let out = partfilter(&["check", "--model", path(&model), "--condition", "thm11", "--subset", "1,2,3,4"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("\"kind\": \"nonstable\""), "{text}");
}

#[test]
fn trivial_partition_has_zero_entropy() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("trivial.json");
    std::fs::write(
        &model,
        r#"{"states": 2, "P": [[0,0,0.7],[0,1,0.3],[1,0,0.4],[1,1,0.6]], "partition": {"lumping": ["u", "u"]}}"#,
    )
    .unwrap();
    let out = partfilter(&["entropy", "--model", path(&model), "--horizon", "3", "--bracket", "--prune", "0"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let mut rows = text.lines();
    assert_eq!(rows.next(), Some("n,H_n,H_R_n,L_n,U_n,pruned_mass"));
    for row in rows {
        for v in row.split(',').skip(1) {
            assert!(v.parse::<f64>().unwrap().abs() < 1e-15, "{row}");
        }
    }
}

#[test]
fn simulation_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("rw.json");
    let params = dir.path().join("params.json");
    std::fs::write(&params, r#"{"case": "a", "n": 16}"#).unwrap();
    assert!(partfilter(&["gallery", "random-walk", "--params", path(&params), "--out", path(&model)]).status.success());
    let run = |threads: &str| {
        let o = partfilter(&["--threads", threads, "simulate", "--model", path(&model), "--steps", "50", "--seed", "9"]);
        assert!(o.status.success());
        o.stdout
    };
    let first = run("1");
    assert_eq!(first, run("4"));
    assert_eq!(String::from_utf8(first).unwrap().lines().count(), 52);
}

#[test]
fn undecided_check_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("kesten.json");
    assert!(partfilter(&["gallery", "kesten", "--out", path(&model)]).status.success());
    let out = partfilter(&["check", "--model", path(&model), "--condition", "a", "--max-word-len", "6"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stdout(&out).contains("\"kind\": \"undecided\""));
}

#[test]
fn malformed_input_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("bad.json");
    std::fs::write(&model, "{\"states\": 2,").unwrap();
    let out = partfilter(&["check", "--model", path(&model), "--condition", "a"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("malformed JSON"));
    let out = partfilter(&["check", "--model", path(&model), "--condition", "bogus"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn evolve_and_distance() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("kesten.json");
    let (mu, nu) = (dir.path().join("mu.json"), dir.path().join("nu.json"));
    assert!(partfilter(&["gallery", "kesten", "--out", path(&model)]).status.success());
    let start = "0.15,0.35,0.15,0.35,0,0,0,0";
    for (out, s) in [(&mu, start), (&nu, "0.35,0.15,0.15,0.35,0,0,0,0")] {
        let o = partfilter(&["evolve", "--model", path(&model), "--steps", "3", "--start", s, "--out", path(out)]);
        assert!(o.status.success());
    }
    let o = partfilter(&["distance", "--mu", path(&mu), "--nu", path(&nu)]);
    assert!(o.status.success());
    let d: f64 = stdout(&o).trim().parse().unwrap();
    // orbit points of both starts stay 0.4 apart
    assert!((d - 0.4).abs() < 1e-11, "{d}");
}
