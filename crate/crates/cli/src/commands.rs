use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::thread;

use clap::{ArgMatches, CommandFactory};
use dshn::block::DenseComplex;
use dshn::data::{generate_synthetic, LabeledDataset, SyntheticConfig};
use dshn::hypergraph::from_directed_graph;
use dshn::instances::InstanceSpec;
use dshn::io;
use dshn::model::{train, EpochMetrics, ModelConfig, TrainConfig, TrainOutcome};
use dshn::sheaf::{build_fixed_sheaf, SheafConfig};
use dshn::spectral::{embedded_eigenvalues, run_random_suite, Check, SpectrumReport, HERMITIAN_INPUT_TOL, SPECTRAL_TOL};
use dshn::theorems::{prior_counterexample, theorem_suites};
use dshn::build_laplacian;

use crate::args::*;
use crate::manifest::{file_digest, Manifest};

/// Why a run stopped early.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Divergence(String),
}

impl From<dshn::Error> for Failure {
    fn from(e: dshn::Error) -> Self {
        match e {
            dshn::Error::Divergence { .. } => Failure::Divergence(e.to_string()),
            other => Failure::Usage(other.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

#[derive(Debug, PartialEq, Eq)]
pub enum Status {
    Passed,
    CheckFailed,
}

/// Collects the manifest and the text destined for standard output.
pub struct Run {
    pub manifest: Manifest,
    pub stdout: String,
    inputs: usize,
}

impl Run {
    pub fn new(subcommand: &str, matches: &ArgMatches) -> Self {
        let mut manifest = Manifest::default();
        manifest.push("subcommand", subcommand);
        let cli = Cli::command();
        let spec = cli.find_subcommand(subcommand).expect("known subcommand");
        for arg in spec.get_arguments() {
            let id = arg.get_id().as_str();
            if id == "config" || id == "manifest" {
                continue;
            }
            if let Some(raw) = matches.get_raw(id) {
                let joined: Vec<String> = raw.map(|v| v.to_string_lossy().into_owned()).collect();
                manifest.push(format!("flag.{}", id.replace('_', "-")), joined.join(","));
            }
        }
        Run {
            manifest,
            stdout: String::new(),
            inputs: 0,
        }
    }

    pub fn say(&mut self, line: impl AsRef<str>) {
        self.stdout.push_str(line.as_ref());
        if !line.as_ref().ends_with('\n') {
            self.stdout.push('\n');
        }
    }

    pub fn input(&mut self, path: &Path) -> Result<(), Failure> {
        let digest = file_digest(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
        self.manifest.push(format!("input.{}.path", self.inputs), path.display());
        self.manifest.push(format!("input.{}.sha256", self.inputs), digest);
        self.inputs += 1;
        Ok(())
    }

    pub fn output(&mut self, label: &str, path: &Path) -> Result<(), Failure> {
        self.manifest.push(format!("output.{label}"), path.display());
        self.manifest.push(format!("digest.{label}"), file_digest(path)?);
        Ok(())
    }

    pub fn result(&mut self, key: &str, value: impl ToString) {
        self.manifest.push(format!("result.{key}"), value);
    }
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

pub fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

/// Manifest location when `--manifest` is not given.
pub fn default_manifest(command: &Command) -> PathBuf {
    let beside = |p: Option<&PathBuf>, name: &str| match p {
        Some(p) => with_suffix(p, ".manifest"),
        None => PathBuf::from(format!("dshn-{name}.manifest")),
    };
    match command {
        Command::GenSynthetic(a) => beside(Some(&a.out), "gen-synthetic"),
        Command::TransformGraph(a) => beside(Some(&a.out), "transform-graph"),
        Command::BuildLaplacian(a) => beside(a.out.as_ref(), "build-laplacian"),
        Command::VerifySpectral(a) => beside(a.report.as_ref(), "verify-spectral"),
        Command::TheoremCheck(a) => beside(a.report.as_ref(), "theorem-check"),
        Command::Train(a) => beside(a.metrics_out.as_ref(), "train"),
        Command::QSweep(a) => beside(a.out.as_ref(), "q-sweep"),
        Command::Replay(a) => with_suffix(&a.source, ".replay"),
    }
}

/// Files and prefixes the command writes, manifest excluded.
pub fn output_paths(command: &Command) -> Vec<PathBuf> {
    let paths = match command {
        Command::GenSynthetic(a) => vec![Some(&a.out)],
        Command::TransformGraph(a) => vec![Some(&a.out)],
        Command::BuildLaplacian(a) => vec![a.out.as_ref()],
        Command::VerifySpectral(a) => vec![a.report.as_ref()],
        Command::TheoremCheck(a) => vec![a.report.as_ref()],
        Command::Train(a) => vec![a.metrics_out.as_ref()],
        Command::QSweep(a) => vec![a.out.as_ref()],
        Command::Replay(_) => vec![],
    };
    paths.into_iter().flatten().cloned().collect()
}

pub fn check_q(q: f64) -> Result<(), Failure> {
    if (0.0..=0.25).contains(&q) {
        Ok(())
    } else {
        Err(Failure::Usage(format!("q must lie in [0, 0.25], got {q}")))
    }
}

pub fn gen_synthetic(a: &GenArgs, run: &mut Run) -> Result<Status, Failure> {
    run.manifest.push("seed", a.seed);
    let cfg = SyntheticConfig {
        n: a.n,
        classes: a.classes,
        h_min: a.hmin,
        h_max: a.hmax,
        intra: a.intra,
        inter: a.inter,
        seed: a.seed,
    };
    let ds = generate_synthetic(&cfg)?;
    let paths = ds.save(&a.out)?;
    for (label, p) in ["hypergraph", "features", "labels", "splits"].iter().zip(&paths) {
        run.output(label, p)?;
    }
    let m = ds.hypergraph.num_edges();
    run.result("vertices", ds.num_vertices());
    run.result("hyperedges", m);
    run.say(format!("wrote {} vertices and {m} hyperedges to {}.*", ds.num_vertices(), a.out.display()));
    Ok(Status::Passed)
}

pub fn transform_graph(a: &TransformArgs, run: &mut Run) -> Result<Status, Failure> {
    run.manifest.push("seed", a.seed);
    run.input(&a.input)?;
    let g = io::read_arcs(&a.input)?;
    let h = from_directed_graph(&g);
    io::write_hypergraph(&h, &a.out)?;
    run.output("hypergraph", &a.out)?;
    run.result("hyperedges", h.num_edges());
    run.say(format!("{} arcs -> {} hyperedges", g.arcs().len(), h.num_edges()));
    Ok(Status::Passed)
}

pub fn build(a: &BuildArgs, run: &mut Run) -> Result<Status, Failure> {
    run.manifest.push("seed", a.seed);
    check_q(a.q)?;
    run.input(&a.input)?;
    let h = io::read_hypergraph(&a.input)?;
    let sheaf = build_fixed_sheaf(&h, SheafConfig::new(a.q, a.stalk_dim, a.sheaf)?, a.seed)?;
    let l = build_laplacian(&h, &sheaf, a.normalized)?.l.to_dense()?;
    let text = io::format_dense(l.rows, l.cols, &l.data);
    run.result("dimension", l.rows);
    match &a.out {
        Some(path) => {
            write(path, &text)?;
            run.output("laplacian", path)?;
            run.say(format!("wrote {0}x{0} Laplacian to {1}", l.rows, path.display()));
        }
        None => run.say(text),
    }
    Ok(Status::Passed)
}

fn render_checks(checks: &[Check]) -> String {
    let mut s = String::new();
    for c in checks {
        let verdict = if c.passed { "pass" } else { "fail" };
        let _ = writeln!(s, "check {} value {:e} bound {:e} {verdict}", c.name, c.value, c.bound);
    }
    s
}

pub fn verify(a: &VerifyArgs, run: &mut Run) -> Result<Status, Failure> {
    run.manifest.push("seed", a.seed);
    let (report, passed) = match &a.matrix {
        Some(path) => {
            run.input(path)?;
            let (rows, cols, data) = io::parse_dense(&fs::read_to_string(path)?)?;
            if rows != cols {
                return Err(Failure::Usage(format!("matrix is {rows}x{cols}, expected square")));
            }
            let m = DenseComplex { rows, cols, data };
            let defect = m.hermitian_defect();
            let mut checks = vec![Check::at_most("hermitian", defect, 1e-10)];
            let mut text = format!("dimension {rows}\n");
            if defect <= HERMITIAN_INPUT_TOL {
                let paired = embedded_eigenvalues(&m)?;
                let pairing = paired.chunks(2).map(|p| (p[1] - p[0]).abs()).fold(0.0, f64::max);
                let spectrum = SpectrumReport::of(&m)?;
                checks.push(Check::at_most("pairing", pairing, 1e-9));
                checks.push(Check::at_least("min_eig", spectrum.min_eig, -SPECTRAL_TOL));
                if a.normalized {
                    checks.push(Check::at_most("max_eig", spectrum.max_eig, 1.0 + SPECTRAL_TOL));
                }
                let eig: Vec<String> = spectrum.eigenvalues.iter().map(|x| x.to_string()).collect();
                let _ = writeln!(text, "eigenvalues {}", eig.join(" "));
                run.result("min_eig", spectrum.min_eig);
                run.result("max_eig", spectrum.max_eig);
            }
            text.push_str(&render_checks(&checks));
            (text, checks.iter().all(|c| c.passed))
        }
        None => {
            let r = run_random_suite(a.trials, a.seed, &InstanceSpec::default())?;
            run.result("failures", r.failures.len());
            run.result("duta_non_psd", r.duta_non_psd);
            (r.render(), r.all_passed())
        }
    };
    if let Some(path) = &a.report {
        write(path, &report)?;
        run.output("report", path)?;
    }
    run.say(report);
    Ok(if passed { Status::Passed } else { Status::CheckFailed })
}

pub fn theorem_check(a: &TheoremArgs, run: &mut Run) -> Result<Status, Failure> {
    run.manifest.push("seed", a.seed);
    let mut report = String::new();
    let mut passed = true;
    if a.trials > 0 {
        for r in theorem_suites(a.trials, a.seed)? {
            let verdict = if r.passed() { "pass" } else { "fail" };
            passed &= r.passed();
            let _ = writeln!(
                report,
                "theorem {} trials {} max_deviation {:e} {verdict}",
                r.name, r.trials, r.max_deviation
            );
            run.result(&format!("{}.max_deviation", r.name), r.max_deviation);
        }
        let cex = prior_counterexample()?;
        let eig: Vec<String> = cex.prior.eigenvalues.iter().map(|x| x.to_string()).collect();
        let verdict = if cex.separates() { "pass" } else { "fail" };
        passed &= cex.separates();
        let _ = writeln!(
            report,
            "counterexample reported_matrix_deviation {:e} prior_eigenvalues {} prior_min_eig {} ours_min_eig {} {verdict}",
            cex.matrix_deviation,
            eig.join(","),
            cex.prior.min_eig,
            cex.ours.min_eig
        );
        run.result("counterexample.prior_min_eig", cex.prior.min_eig);
    }
    if let Some(path) = &a.report {
        write(path, &report)?;
        run.output("report", path)?;
    }
    run.say(report);
    Ok(if passed { Status::Passed } else { Status::CheckFailed })
}

fn load_data(prefix: &Path, run: &mut Run) -> Result<LabeledDataset, Failure> {
    for p in LabeledDataset::paths(prefix) {
        run.input(&p)?;
    }
    Ok(LabeledDataset::load(prefix)?)
}

pub fn model_config(f: &ModelFlags, q: f64) -> ModelConfig {
    ModelConfig {
        num_layers: f.layers,
        stalk_dim: f.stalk_dim,
        hidden: f.hidden,
        q,
        sheaf_activation: f.sheaf_activation,
        map_shape: f.sheaf,
        residual: f.residual,
        light: f.light,
        dynamic_sheaf: f.dynamic_sheaf,
        left_projection: f.left_projection,
        sheaf_dropout: f.dropout,
        aggregation: f.aggregation,
        phi_depth: f.phi_depth,
        classifier_width: f.classifier_width,
        seed: f.seed,
    }
}

pub fn train_config(f: &ModelFlags) -> TrainConfig {
    TrainConfig {
        lr: f.lr,
        weight_decay: f.wd,
        epochs: f.epochs,
        patience: f.patience,
        spectral_check_every: f.spectral_check_every,
    }
}

/// Per-epoch table, then a closing `test_acc,<value>` line.
pub fn metrics_table(history: &[EpochMetrics], test_acc: f64, spectral: bool) -> String {
    let mut s = String::from("epoch,train_loss,train_acc,val_acc");
    s.push_str(if spectral { ",spectral_max\n" } else { "\n" });
    for m in history {
        let _ = write!(s, "{},{},{},{}", m.epoch, m.train_loss, m.train_acc, m.val_acc);
        if spectral {
            s.push(',');
            if let Some(x) = m.spectral_max {
                let _ = write!(s, "{x}");
            }
        }
        s.push('\n');
    }
    let _ = writeln!(s, "test_acc,{test_acc}");
    s
}

pub fn train_cmd(a: &TrainArgs, run: &mut Run) -> Result<Status, Failure> {
    run.manifest.push("seed", a.model.seed);
    check_q(a.q)?;
    let data = load_data(&a.model.data, run)?;
    let tc = train_config(&a.model);
    let out: TrainOutcome = train(&data, &model_config(&a.model, a.q), &tc)?;
    let spectral = tc.spectral_check_every > 0;
    if let Some(path) = &a.metrics_out {
        write(path, &metrics_table(&out.history, out.test_acc, spectral))?;
        run.output("metrics", path)?;
    }
    let worst = out.history.iter().filter_map(|m| m.spectral_max).fold(f64::NEG_INFINITY, f64::max);
    run.result("epochs", out.history.len());
    run.result("best_epoch", out.best_epoch);
    run.result("best_val_acc", out.best_val_acc);
    run.result("test_acc", out.test_acc);
    run.say(format!(
        "epochs {} best_epoch {} val_acc {} test_acc {}",
        out.history.len(),
        out.best_epoch,
        out.best_val_acc,
        out.test_acc
    ));
    if spectral {
        run.result("spectral_max", worst);
        run.say(format!("spectral_max {worst}"));
        if worst > 1.0 + SPECTRAL_TOL {
            return Ok(Status::CheckFailed);
        }
    }
    Ok(Status::Passed)
}

pub fn q_sweep(a: &SweepArgs, run: &mut Run) -> Result<Status, Failure> {
    run.manifest.push("seed", a.model.seed);
    if a.grid.is_empty() {
        return Err(Failure::Usage("empty q grid".into()));
    }
    for &q in &a.grid {
        check_q(q)?;
    }
    let data = load_data(&a.model.data, run)?;
    let tc = train_config(&a.model);
    let one = |q: f64| train(&data, &model_config(&a.model, q), &tc).map(|o| o.test_acc);

    let mut table = String::from("q,test_acc\n");
    let flush = |table: &str, run: &mut Run| -> Result<(), Failure> {
        if let Some(path) = &a.out {
            write(path, table)?;
            run.output("table", path)?;
        }
        Ok(())
    };
    let results: Vec<dshn::Result<f64>> = if a.parallel {
        thread::scope(|s| {
            let handles: Vec<_> = a.grid.iter().map(|&q| s.spawn(move || one(q))).collect();
            handles.into_iter().map(|h| h.join().expect("sweep worker panicked")).collect()
        })
    } else {
        let mut done = Vec::new();
        for &q in &a.grid {
            let r = one(q);
            let failed = r.is_err();
            done.push(r);
            if failed {
                break;
            }
        }
        done
    };
    for (i, (q, r)) in a.grid.iter().zip(results).enumerate() {
        match r {
            Ok(acc) => {
                let _ = writeln!(table, "{q},{acc}");
                run.result(&format!("{i}.q"), q);
                run.result(&format!("{i}.test_acc"), acc);
            }
            Err(e) => {
                flush(&table, run)?;
                run.say(table);
                return Err(e.into());
            }
        }
    }
    flush(&table, run)?;
    run.say(table);
    Ok(Status::Passed)
}
