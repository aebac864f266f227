use std::fs;
use std::process::{Command, Output};

use tse_core::cli::emit::TableDoc;

fn tse(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tse"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

#[test]
fn acc_prints_count() {
    let o = tse(&["acc", "--N", "3", "--ai", "2", "--ao", "1", "--b", "0"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "2\n");

    let o = tse(&[
        "acc",
        "--N",
        "3",
        "--ai",
        "2",
        "--ao",
        "1",
        "--b",
        "0",
        "--decompose",
    ]);
    assert_eq!(stdout(&o), "2\nm=1 n=0 w_t=2 w_11=0 count=2\n");

    let o = tse(&[
        "acc", "--N", "5", "--ai", "1", "--ao", "0", "--b", "1", "--mode", "log",
    ]);
    let v: f64 = stdout(&o).trim().parse().unwrap();
    assert!((v - 5f64.ln()).abs() < 1e-12);
}

#[test]
fn parity_infeasible_ensemble_class_is_zero() {
    let o = tse(&[
        "ensemble", "--q", "2", "--K", "2", "--L", "1", "--a", "1", "--b", "1",
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "0\n");

    let o = tse(&[
        "ensemble",
        "--q",
        "2",
        "--K",
        "2",
        "--L",
        "1",
        "--a",
        "1",
        "--b",
        "2",
        "--breakdown",
    ]);
    let text = stdout(&o);
    assert_eq!(text.lines().next(), Some("5"));
    assert_eq!(text.lines().count(), 3);
}

#[test]
fn usage_errors_exit_1() {
    for args in [
        vec!["acc", "--N", "3"],
        vec!["frobnicate"],
        vec!["acc", "--N", "x", "--ai", "0", "--ao", "0", "--b", "0"],
        vec!["acc", "--N", "3", "--ai", "9", "--ao", "0", "--b", "0"],
        vec!["acc-table", "--N", "600"],
        vec!["asym-point", "--alpha", "-0.1", "--beta", "0"],
        vec!["asym-sweep", "--split", "fixed:0.2,0.2"],
        vec!["oracle", "--kind", "graph", "--q", "2"],
        vec![
            "ensemble-table",
            "--q",
            "2",
            "--K",
            "2",
            "--L",
            "1",
            "--output",
            "/nonexistent/dir/t.json",
        ],
    ] {
        let o = tse(&args);
        assert_eq!(o.status.code(), Some(1), "{args:?}: {}", stderr(&o));
        assert!(stderr(&o).starts_with("tse: "), "{args:?}");
    }
    let o = tse(&["--help"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("asym-sweep"));
}

#[test]
fn infeasible_point_exits_2() {
    let o = tse(&[
        "asym-point",
        "--q",
        "3",
        "--L",
        "2",
        "--alpha",
        "5",
        "--beta",
        "0.1",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("infeasible"));

    let o = tse(&[
        "asym-point",
        "--q",
        "3",
        "--L",
        "2",
        "--alpha",
        "0.1",
        "--beta",
        "0.01",
        "--split",
        "equal",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[1].split(',').count(), lines[0].split(',').count());
}

#[test]
fn verify_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("report.json");
    let o = tse(&[
        "verify",
        "--max-n",
        "6",
        "--output",
        report.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).lines().all(|l| l.starts_with("PASS")));
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(json["mismatches"], 0);

    let o = tse(&["verify", "--max-n", "6", "--inject-fault"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stdout(&o).contains("key [5, 1, 0, 1]: expected 5, got 6"));
}

#[test]
fn default_verify_passes() {
    let o = tse(&["verify"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
}

#[test]
fn sweep_csv_shape_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let args = |p: &std::path::Path| {
        vec![
            "asym-sweep".to_string(),
            "--delta".into(),
            "0.1".into(),
            "--alpha-start".into(),
            "0.005".into(),
            "--alpha-stop".into(),
            "0.3".into(),
            "--alpha-steps".into(),
            "200".into(),
            "--output".into(),
            p.to_str().unwrap().into(),
        ]
    };
    let run = |p| {
        let args = args(p);
        let o = tse(&args.iter().map(String::as_str).collect::<Vec<_>>());
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    };
    run(&a);
    run(&b);
    let text = fs::read(&a).unwrap();
    assert_eq!(text, fs::read(&b).unwrap());
    let text = String::from_utf8(text).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(
        lines[0],
        "# q=3 L=2 delta=0.1 split=free grid=0.005:0.3:200 q_assumed=true"
    );
    assert_eq!(lines.len(), 202);
    let columns = lines[1].split(',').count();
    assert_eq!(columns, 5 + 4 * 2);
    assert!(lines[2..].iter().all(|l| l.split(',').count() == columns));
    let alphas: Vec<f64> = lines[2..]
        .iter()
        .map(|l| l.split(',').next().unwrap().parse().unwrap())
        .collect();
    assert!(alphas.windows(2).all(|w| w[0] < w[1]));
}

#[test]
fn empty_sweep_has_metadata_and_header() {
    let o = tse(&["asym-sweep", "--q", "3", "--L", "3", "--alpha-steps", "0"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert_eq!(text.lines().count(), 2);
    assert!(text.starts_with("# q=3 L=3 delta=0.1 split=free grid=0.01:0.3:0\n"));
}

#[test]
fn json_tables_round_trip() {
    let o = tse(&["acc-table", "--N", "6"]);
    let doc = TableDoc::parse(&stdout(&o)).unwrap();
    assert_eq!(doc.kind, "iotse");
    assert_eq!(
        doc.to_iotse().unwrap(),
        tse_core::accumulator::acc_iotse_table(6).unwrap()
    );

    let oracle = tse(&["oracle", "--kind", "trellis", "--N", "6"]);
    assert_eq!(
        TableDoc::parse(&stdout(&oracle)).unwrap().entries,
        doc.entries
    );

    let o = tse(&["ensemble-table", "--q", "2", "--K", "2", "--L", "1"]);
    let text = stdout(&o);
    assert!(text.contains("{\"key\":[1,2],\"value\":\"5\"}"));
    let graph = tse(&[
        "oracle", "--kind", "graph", "--q", "2", "--K", "2", "--L", "1",
    ]);
    assert_eq!(
        TableDoc::parse(&stdout(&graph))
            .unwrap()
            .to_ensemble()
            .unwrap(),
        TableDoc::parse(&text).unwrap().to_ensemble().unwrap()
    );

    let o = tse(&["acc-table", "--N", "1"]);
    let doc = TableDoc::parse(&stdout(&o)).unwrap();
    let keys: Vec<Vec<usize>> = doc.entries.iter().map(|e| e.key.clone()).collect();
    assert_eq!(keys, vec![vec![0, 0, 0], vec![1, 0, 1]]);
}

#[test]
fn config_file_supplies_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("tse.conf");
    fs::write(
        &cfg,
        "# shared\nq = 2\nK = 2\nL = 1\nN = 3\nbreakdown = true\n",
    )
    .unwrap();
    let c = cfg.to_str().unwrap();

    let o = tse(&["--config", c, "ensemble", "--a", "1", "--b", "2"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(stdout(&o).lines().next(), Some("5"));
    assert_eq!(stdout(&o).lines().count(), 3);

    // Explicit flags win over the file.
    let o = tse(&[
        "acc", "--config", c, "--N", "5", "--ai", "1", "--ao", "0", "--b", "1",
    ]);
    assert_eq!(stdout(&o), "5\n");

    fs::write(&cfg, "bogus = 1\n").unwrap();
    assert_eq!(
        tse(&["--config", c, "acc-table", "--N", "2"]).status.code(),
        Some(1)
    );
    assert_eq!(
        tse(&["--config", "/nonexistent.conf", "acc-table", "--N", "2"])
            .status
            .code(),
        Some(1)
    );
}

#[test]
fn thread_count_does_not_change_output() {
    let args = ["asym-sweep", "--alpha-steps", "8", "--split", "equal"];
    let one = Command::new(env!("CARGO_BIN_EXE_tse"))
        .args(args)
        .env("TSE_THREADS", "1")
        .output()
        .unwrap();
    let four = Command::new(env!("CARGO_BIN_EXE_tse"))
        .args(args)
        .env("TSE_THREADS", "4")
        .output()
        .unwrap();
    assert_eq!(one.status.code(), Some(0));
    assert_eq!(one.stdout, four.stdout);
    let bad = Command::new(env!("CARGO_BIN_EXE_tse"))
        .args(args)
        .env("TSE_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(1));
}

#[test]
fn preset_writes_one_file_per_curve() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("fig4");
    let o = tse(&[
        "asym-sweep",
        "--preset",
        "fig4",
        "--output",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let mut names: Vec<String> = fs::read_dir(&out)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    assert_eq!(
        names,
        [
            "fig4_delta0.05.csv",
            "fig4_delta0.1.csv",
            "fig4_delta0.2.csv",
            "fig4_delta0.csv"
        ]
    );
    let text = fs::read_to_string(out.join("fig4_delta0.1.csv")).unwrap();
    assert!(text
        .starts_with("# q=3 L=2 delta=0.1 split=fixed:0.5,0.5 grid=0.01:0.3:30 q_assumed=true\n"));
    assert_eq!(text.lines().count(), 32);
}
