use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use mshf::io::{parse_decision_csv, parse_labels, PointFile};

fn mshf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mshf")).args(args).output().expect("binary runs")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).trim().to_string()
}

#[test]
fn generate_is_deterministic_and_sized() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.txt"), dir.path().join("b.txt"));
    assert!(mshf(&["generate", "3-lines-3d", "--seed", "3", "-o", p(&a)]).status.success());
    assert!(mshf(&["generate", "3-lines-3d", "--seed", "3", "-o", p(&b)]).status.success());
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    let pf = PointFile::parse(&fs::read_to_string(&a).unwrap()).unwrap();
    assert_eq!(pf.data.len(), 700);
    assert_eq!(pf.data.labels().unwrap().len(), 700);

    let u = dir.path().join("u.txt");
    assert!(mshf(&["generate", "unbalanced-3-lines:8.0", "-o", p(&u)]).status.success());
    let labels = parse_labels(&fs::read_to_string(&u).unwrap()).unwrap();
    let count = |k| labels.iter().filter(|&&l| l == k).count();
    assert_eq!(count(1), 8 * count(3));
    assert_eq!(count(2), count(1));

    let bad = mshf(&["generate", "9-hexagons", "-o", p(&dir.path().join("x"))]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn fit_writes_deterministic_result_files() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("star.txt");
    assert!(mshf(&["generate", "star5", "--seed", "4", "-o", p(&input)]).status.success());
    let (o1, o2) = (dir.path().join("o1"), dir.path().join("o2"));
    for out in [&o1, &o2] {
        let r = mshf(&["fit", p(&input), "--hypothesis-count", "3000", "--seed", "2", "--out-dir", p(out)]);
        assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    }
    for f in ["labels.txt", "modes.json", "decision_graph.csv"] {
        assert_eq!(fs::read(o1.join(f)).unwrap(), fs::read(o2.join(f)).unwrap(), "{f}");
        let text = fs::read_to_string(o1.join(f)).unwrap();
        assert!(text.contains("hypothesis_count"), "{f} lacks the configuration");
        assert!(text.contains("rng_seed"), "{f} lacks the seed");
    }
    let modes: serde_json::Value = serde_json::from_slice(&fs::read(o1.join("modes.json")).unwrap()).unwrap();
    assert_eq!(modes["modes"].as_array().unwrap().len(), 5);
    assert_eq!(modes["config"]["rng_seed"], 2);
    assert_eq!(parse_labels(&fs::read_to_string(o1.join("labels.txt")).unwrap()).unwrap().len(), 900);

    let rows = parse_decision_csv(&fs::read_to_string(o1.join("decision_graph.csv")).unwrap()).unwrap();
    assert_eq!(rows.iter().filter(|r| r.mode).count(), 5);
    assert!(rows.windows(2).all(|w| w[0].weight <= w[1].weight));
    assert!(rows.iter().all(|r| r.retained == r.mtd.is_some()));

    let err = stdout(&mshf(&["eval", p(&o1.join("labels.txt")), p(&input)]));
    assert!(err.parse::<f64>().unwrap() < 10.0, "{err}");

    let svg = dir.path().join("g.svg");
    assert!(mshf(&["plot-decision-graph", p(&o1.join("decision_graph.csv")), "-o", p(&svg)]).status.success());
    let first = fs::read_to_string(&svg).unwrap();
    assert_eq!(first.matches("class=\"mode\"").count(), 5);
    assert!(mshf(&["plot-decision-graph", p(&o1.join("decision_graph.csv")), "-o", p(&svg)]).status.success());
    assert_eq!(fs::read_to_string(&svg).unwrap(), first);
}

#[test]
fn config_file_and_flag_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("c.txt");
    assert!(mshf(&["generate", "3-circles", "-o", p(&input)]).status.success());
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "# run settings\nhypothesis_count = 800\nvariant = mshf1\nepsilon = 0.7\n").unwrap();
    let out = dir.path().join("o");
    let r = mshf(&["fit", p(&input), "--config", p(&cfg), "--epsilon", "0.75", "--set", "xi=1e-9", "--out-dir", p(&out)]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    let labels = fs::read_to_string(out.join("labels.txt")).unwrap();
    for line in ["# hypothesis_count = 800", "# variant = mshf1", "# epsilon = 0.75", "# xi = 0.000000001", "# kind = circle2d"] {
        assert!(labels.contains(line), "missing {line}");
    }

    fs::write(&cfg, "hypothesis_count 800\n").unwrap();
    assert_eq!(mshf(&["fit", p(&input), "--config", p(&cfg), "--out-dir", p(&out)]).status.code(), Some(2));
    assert_eq!(mshf(&["fit", p(&input), "--set", "bogus=1", "--out-dir", p(&out)]).status.code(), Some(2));
}

#[test]
fn error_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.txt");
    fs::write(&empty, "").unwrap();
    let out = p(dir.path());
    assert_eq!(mshf(&["fit", p(&empty), "--out-dir", out]).status.code(), Some(2));
    assert_eq!(mshf(&["fit", p(&dir.path().join("missing.txt")), "--out-dir", out]).status.code(), Some(2));

    let tiny = dir.path().join("tiny.txt");
    fs::write(&tiny, "points line2d 2\n1 2\n").unwrap();
    let r = mshf(&["fit", p(&tiny), "--out-dir", out]);
    assert_eq!(r.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&r.stderr).contains("sampling"));

    let input = dir.path().join("l.txt");
    assert!(mshf(&["generate", "3-lines-2d", "-o", p(&input)]).status.success());
    let r = mshf(&["fit", p(&input), "--k-fraction", "1.5", "--out-dir", out]);
    assert_eq!(r.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&r.stderr).contains("configuration"));

    let csv = dir.path().join("empty.csv");
    fs::write(&csv, "").unwrap();
    assert_eq!(mshf(&["plot-decision-graph", p(&csv), "-o", p(&dir.path().join("g.svg"))]).status.code(), Some(2));
    assert_eq!(mshf(&["fit"]).status.code(), Some(2));
}

#[test]
fn eval_examples() {
    let dir = tempfile::tempdir().unwrap();
    let write = |name: &str, labels: &[usize]| {
        let path = dir.path().join(name);
        fs::write(&path, labels.iter().map(|l| format!("{l}\n")).collect::<String>()).unwrap();
        path
    };
    let truth = write("t.txt", &[1, 1, 1, 2, 2, 2, 0, 0, 3, 3]);
    let flipped = write("f.txt", &[1, 1, 1, 2, 2, 2, 0, 1, 3, 3]);
    let permuted = write("p.txt", &[2, 2, 2, 1, 1, 1, 0, 0, 3, 3]);
    let short = write("s.txt", &[1, 2]);
    assert_eq!(stdout(&mshf(&["eval", p(&truth), p(&truth)])), "0.00");
    assert_eq!(stdout(&mshf(&["eval", p(&flipped), p(&truth)])), "10.00");
    assert_eq!(stdout(&mshf(&["eval", p(&permuted), p(&truth)])), "0.00");
    assert_eq!(mshf(&["eval", p(&short), p(&truth)]).status.code(), Some(2));
}
