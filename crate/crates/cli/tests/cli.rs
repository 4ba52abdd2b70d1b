use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use dshn::data::LabeledDataset;
use dshn::io::{parse_dense, read_hypergraph};
use tempfile::TempDir;

fn dshn(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dshn"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn manifest(path: &Path) -> Vec<(String, String)> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| {
            let (k, v) = l.split_once('=').unwrap();
            (k.to_string(), v.to_string())
        })
        .collect()
}

fn get(m: &[(String, String)], key: &str) -> String {
    m.iter().find(|(k, _)| k == key).map(|(_, v)| v.clone()).unwrap_or_else(|| panic!("no {key}"))
}

/// Small three-class dataset at `<dir>/syn`.
fn small_dataset(dir: &TempDir, inter: &str) -> String {
    let prefix = dir.path().join("syn");
    let p = prefix.to_str().unwrap().to_string();
    let out = dshn(dir.path(), &["gen-synthetic", "--n", "60", "--classes", "3", "--intra", "5", "--inter", inter, "--out", &p]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    p
}

#[test]
fn usage_errors_exit_with_two() {
    let dir = TempDir::new().unwrap();
    let data = small_dataset(&dir, "4");
    let d = dir.path();
    assert_eq!(code(&dshn(d, &["frobnicate"])), 2);
    assert_eq!(code(&dshn(d, &[])), 2);
    assert_eq!(code(&dshn(d, &["train"])), 2, "--data is required");
    assert_eq!(code(&dshn(d, &["train", "--data", &data, "--q", "0.3"])), 2);
    assert_eq!(code(&dshn(d, &["train", "--data", &data, "--sheaf", "circulant"])), 2);
    assert_eq!(code(&dshn(d, &["train", "--data", "missing/prefix"])), 2);
    assert_eq!(code(&dshn(d, &["gen-synthetic", "--n", "10", "--classes", "3", "--out", "x"])), 2);
    assert_eq!(code(&dshn(d, &["build-laplacian", "--input", "nothing.hg"])), 2);
    assert_eq!(code(&dshn(d, &["--help"])), 0);
    assert_eq!(code(&dshn(d, &["train", "--help"])), 0);
}

#[test]
fn failed_checks_exit_with_one() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    fs::write(d.join("indefinite.txt"), "1+0j 2+0j\n2+0j 1+0j\n").unwrap();
    let out = dshn(d, &["verify-spectral", "--matrix", "indefinite.txt"]);
    assert_eq!(code(&out), 1);
    assert!(stdout(&out).contains("check min_eig"));
    assert!(stdout(&out).contains("fail"));

    // eigenvalues 0 and 2: PSD, but above 1
    fs::write(d.join("wide.txt"), "1+0j 1+0j\n1+0j 1+0j\n").unwrap();
    assert_eq!(code(&dshn(d, &["verify-spectral", "--matrix", "wide.txt"])), 0);
    assert_eq!(code(&dshn(d, &["verify-spectral", "--matrix", "wide.txt", "--normalized"])), 1);
}

#[test]
fn divergence_exits_with_three() {
    let dir = TempDir::new().unwrap();
    let data = small_dataset(&dir, "4");
    let out = dshn(dir.path(), &["train", "--data", &data, "--lr", "1e300", "--epochs", "20", "--manifest", "m"]);
    assert_eq!(code(&out), 3, "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(get(&manifest(&dir.path().join("m")), "status"), "diverged");
}

#[test]
fn config_file_supplies_defaults_and_flags_win() {
    let dir = TempDir::new().unwrap();
    let data = small_dataset(&dir, "4");
    let d = dir.path();
    // `grid` belongs to q-sweep only and is skipped by train
    fs::write(d.join("run.cfg"), "# shared\nepochs = 7\nlr=0.02\nstalk_dim=2\ngrid=0,0.1\n").unwrap();

    let out = dshn(d, &["train", "--data", &data, "--config", "run.cfg", "--lr", "0.05", "--manifest", "a"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let m = manifest(&d.join("a"));
    assert_eq!(get(&m, "flag.epochs"), "7");
    assert_eq!(get(&m, "flag.stalk-dim"), "2");
    assert_eq!(get(&m, "flag.lr"), "0.05");
    assert_eq!(get(&m, "result.epochs"), "7");

    let out = dshn(d, &["q-sweep", "--data", &data, "--config", "run.cfg", "--manifest", "b"]);
    assert_eq!(code(&out), 0);
    assert_eq!(stdout(&out).lines().count(), 3, "header plus two grid points");

    fs::write(d.join("typo.cfg"), "epoch=7\n").unwrap();
    assert_eq!(code(&dshn(d, &["train", "--data", &data, "--config", "typo.cfg"])), 2);
    fs::write(d.join("dup.cfg"), "lr=1\nlr=2\n").unwrap();
    assert_eq!(code(&dshn(d, &["train", "--data", &data, "--config", "dup.cfg"])), 2);
    assert_eq!(code(&dshn(d, &["train", "--data", &data, "--config", "absent.cfg"])), 2);
}

#[test]
fn transform_graph_examples() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    fs::write(d.join("empty.txt"), "4 0\n").unwrap();
    assert_eq!(code(&dshn(d, &["transform-graph", "--input", "empty.txt", "--out", "empty.hg"])), 0);
    let h = read_hypergraph(d.join("empty.hg")).unwrap();
    assert_eq!((h.num_vertices(), h.num_edges()), (4, 0));

    fs::write(d.join("arcs.txt"), "5 7\n1 2\n1 3\n1 4\n2 3\n3 1\n5 4\n5 4\n").unwrap();
    assert_eq!(code(&dshn(d, &["transform-graph", "--input", "arcs.txt", "--out", "arcs.hg"])), 0);
    let h = read_hypergraph(d.join("arcs.hg")).unwrap();
    // one hyperedge per vertex with outgoing arcs
    assert_eq!(h.num_edges(), 4);
    for e in h.edges() {
        assert_eq!(e.tail().len(), 1);
    }
    assert_eq!(h.edges()[0].head(), &[1, 2, 3]);
    assert_eq!(h.edges()[3].head(), &[3], "repeated arcs collapse");

    // missing output directories are created
    assert_eq!(code(&dshn(d, &["transform-graph", "--input", "arcs.txt", "--out", "a/b/arcs.hg"])), 0);
    assert!(d.join("a/b/arcs.hg.manifest").exists());

    fs::write(d.join("loop.txt"), "3 1\n2 2\n").unwrap();
    assert_eq!(code(&dshn(d, &["transform-graph", "--input", "loop.txt", "--out", "loop.hg"])), 2);
}

#[test]
fn pipeline_closes_from_generation_to_verification() {
    let dir = TempDir::new().unwrap();
    let data = small_dataset(&dir, "4");
    let d = dir.path();
    let loaded = LabeledDataset::load(&data).unwrap();
    let hg = format!("{data}.hg");

    for (sheaf, q) in [("trivial", "0"), ("diagonal", "0.1"), ("full", "0.25")] {
        let out = dshn(
            d,
            &["build-laplacian", "--input", &hg, "--q", q, "--stalk-dim", "2", "--sheaf", sheaf, "--normalized", "--out", "l.txt"],
        );
        assert_eq!(code(&out), 0);
        let (rows, cols, _) = parse_dense(&fs::read_to_string(d.join("l.txt")).unwrap()).unwrap();
        assert_eq!((rows, cols), (loaded.num_vertices() * 2, loaded.num_vertices() * 2));
        let out = dshn(d, &["verify-spectral", "--matrix", "l.txt", "--normalized"]);
        assert_eq!(code(&out), 0, "{sheaf} q={q}: {}", stdout(&out));
    }

    // the unnormalized operator is PSD but not bounded by 1
    assert_eq!(code(&dshn(d, &["build-laplacian", "--input", &hg, "--q", "0.2", "--out", "u.txt"])), 0);
    assert_eq!(code(&dshn(d, &["verify-spectral", "--matrix", "u.txt"])), 0);

    let out = dshn(d, &["train", "--data", &data, "--epochs", "12", "--metrics-out", "m.csv", "--manifest", "t"]);
    assert_eq!(code(&out), 0);
    let metrics = fs::read_to_string(d.join("m.csv")).unwrap();
    let lines: Vec<&str> = metrics.lines().collect();
    assert_eq!(lines[0], "epoch,train_loss,train_acc,val_acc");
    assert!(lines.last().unwrap().starts_with("test_acc,"));
    let m = manifest(&d.join("t"));
    assert_eq!(lines.len(), 2 + get(&m, "result.epochs").parse::<usize>().unwrap());
    assert_eq!(lines.last().unwrap(), &format!("test_acc,{}", get(&m, "result.test_acc")));
    assert_eq!(get(&m, "input.0.path"), format!("{data}.hg"));
}

#[test]
fn random_suite_and_theorem_check_pass() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    let out = dshn(d, &["verify-spectral", "--trials", "25", "--seed", "3", "--report", "v.txt"]);
    assert_eq!(code(&out), 0);
    let report = fs::read_to_string(d.join("v.txt")).unwrap();
    assert!(report.contains("check dirichlet passed 25/25"));

    let out = dshn(d, &["theorem-check", "--trials", "5", "--report", "t.txt"]);
    assert_eq!(code(&out), 0);
    let report = fs::read_to_string(d.join("t.txt")).unwrap();
    assert_eq!(report.lines().filter(|l| l.starts_with("theorem ")).count(), 4);
    assert!(report.lines().all(|l| l.ends_with("pass")), "{report}");

    let out = dshn(d, &["theorem-check", "--trials", "0"]);
    assert_eq!(code(&out), 0);
}

#[test]
fn sweep_with_one_grid_point_has_one_row() {
    let dir = TempDir::new().unwrap();
    let data = small_dataset(&dir, "4");
    let out = dshn(dir.path(), &["q-sweep", "--data", &data, "--epochs", "5", "--grid", "0.2", "--out", "s.csv"]);
    assert_eq!(code(&out), 0);
    let table = fs::read_to_string(dir.path().join("s.csv")).unwrap();
    let rows: Vec<&str> = table.lines().collect();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0], "q,test_acc");
    assert!(rows[1].starts_with("0.2,"));
}

#[test]
fn charge_is_irrelevant_on_undirected_data() {
    let dir = TempDir::new().unwrap();
    let data = small_dataset(&dir, "0");
    let out = dshn(dir.path(), &["q-sweep", "--data", &data, "--epochs", "8", "--grid", "0,0.1,0.25"]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    let accs: Vec<&str> = text.lines().skip(1).map(|l| l.split_once(',').unwrap().1).collect();
    assert_eq!(accs.len(), 3);
    assert!(accs.iter().all(|a| *a == accs[0]), "{accs:?}");
}

#[test]
fn parallel_sweep_matches_sequential() {
    let dir = TempDir::new().unwrap();
    let data = small_dataset(&dir, "4");
    let run = |parallel: &str| {
        let out = dshn(dir.path(), &["q-sweep", "--data", &data, "--epochs", "6", "--grid", "0,0.1,0.2", &format!("--parallel={parallel}")]);
        assert_eq!(code(&out), 0);
        stdout(&out)
    };
    assert_eq!(run("true"), run("false"));
}

#[test]
fn replay_detects_changed_inputs() {
    let dir = TempDir::new().unwrap();
    let data = small_dataset(&dir, "4");
    let d = dir.path();
    assert_eq!(code(&dshn(d, &["train", "--data", &data, "--epochs", "4", "--manifest", "t"])), 0);
    let out = dshn(d, &["replay", "t"]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).starts_with("epochs"));
    assert!(stdout(&out).contains("replay identical"));

    let labels = d.join("syn.labels");
    let mut text = fs::read_to_string(&labels).unwrap();
    text.push('\n');
    fs::write(&labels, text).unwrap();
    assert_eq!(code(&dshn(d, &["replay", "t"])), 1);
    assert_eq!(code(&dshn(d, &["replay", "no-such-manifest"])), 2);
}
