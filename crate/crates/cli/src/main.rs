mod args;
mod commands;
mod config;
mod manifest;

use std::ffi::OsString;
use std::fs;
use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{ArgMatches, CommandFactory, FromArgMatches};

use args::{Cli, Command, ReplayArgs};
use commands::{Failure, Run, Status};
use manifest::{file_digest, sha256_hex, Manifest};

const EXIT_OK: u8 = 0;
const EXIT_CHECK: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_DIVERGENCE: u8 = 3;

fn main() -> ExitCode {
    ExitCode::from(run(std::env::args_os().collect()))
}

fn flag_names(subcommand: Option<&str>) -> config::FlagNames {
    let cli = Cli::command();
    fn longs(c: &clap::Command) -> Vec<String> {
        c.get_arguments().filter_map(|a| a.get_long()).map(str::to_string).collect()
    }
    let own = cli.get_subcommands().find(|c| Some(c.get_name()) == subcommand).map(longs).unwrap_or_default();
    let any = cli.get_subcommands().flat_map(longs).collect();
    config::FlagNames { own, any }
}

fn parse(args: Vec<OsString>) -> Result<(Cli, ArgMatches), u8> {
    let names = flag_names(args.get(1).and_then(|s| s.to_str()));
    let args = config::merge_config(args, &names).map_err(|e| {
        eprintln!("error: {e}");
        EXIT_USAGE
    })?;
    let matches = Cli::command().try_get_matches_from(args).map_err(|e| {
        let _ = e.print();
        if e.use_stderr() {
            EXIT_USAGE
        } else {
            EXIT_OK
        }
    })?;
    let cli = Cli::from_arg_matches(&matches).map_err(|e| {
        let _ = e.print();
        EXIT_USAGE
    })?;
    Ok((cli, matches))
}

fn run(args: Vec<OsString>) -> u8 {
    match parse(args) {
        Ok((cli, matches)) => match &cli.command {
            Command::Replay(r) => replay(r),
            _ => execute(&cli, &matches).0,
        },
        Err(code) => code,
    }
}

/// Runs one subcommand, prints its output and writes its manifest.
fn execute(cli: &Cli, matches: &ArgMatches) -> (u8, Manifest) {
    let (name, sub) = matches.subcommand().expect("a subcommand is required");
    let mut run = Run::new(name, sub);
    let manifest_path = manifest_path(cli);
    // missing parent directories are created; a failure shows up at the write
    for p in commands::output_paths(&cli.command).iter().chain([&manifest_path]) {
        if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
            let _ = fs::create_dir_all(dir);
        }
    }
    let start = Instant::now();
    let outcome = match &cli.command {
        Command::GenSynthetic(a) => commands::gen_synthetic(a, &mut run),
        Command::TransformGraph(a) => commands::transform_graph(a, &mut run),
        Command::BuildLaplacian(a) => commands::build(a, &mut run),
        Command::VerifySpectral(a) => commands::verify(a, &mut run),
        Command::TheoremCheck(a) => commands::theorem_check(a, &mut run),
        Command::Train(a) => commands::train_cmd(a, &mut run),
        Command::QSweep(a) => commands::q_sweep(a, &mut run),
        Command::Replay(_) => unreachable!("replay is dispatched separately"),
    };
    let elapsed = start.elapsed();

    let mut stdout = std::io::stdout().lock();
    let _ = stdout.write_all(run.stdout.as_bytes());
    let _ = stdout.flush();
    let digest = sha256_hex(run.stdout.as_bytes());
    run.manifest.push("digest.stdout", digest);

    let code = match outcome {
        Ok(Status::Passed) => {
            run.manifest.push("status", "ok");
            EXIT_OK
        }
        Ok(Status::CheckFailed) => {
            run.manifest.push("status", "check_failed");
            EXIT_CHECK
        }
        Err(failure) => {
            let (status, message, code) = match failure {
                Failure::Usage(m) => ("error", m, EXIT_USAGE),
                Failure::Divergence(m) => ("diverged", m, EXIT_DIVERGENCE),
            };
            eprintln!("error: {message}");
            run.manifest.push("status", status);
            run.manifest.push("error", message);
            code
        }
    };
    run.manifest.push("duration_ms", elapsed.as_millis());

    let path = manifest_path;
    if let Err(e) = fs::write(&path, run.manifest.render()) {
        eprintln!("error: cannot write manifest {}: {e}", path.display());
        return (code.max(EXIT_USAGE), run.manifest);
    }
    (code, run.manifest)
}

fn manifest_path(cli: &Cli) -> PathBuf {
    match &cli.command {
        Command::GenSynthetic(a) => a.run.manifest.clone(),
        Command::TransformGraph(a) => a.run.manifest.clone(),
        Command::BuildLaplacian(a) => a.run.manifest.clone(),
        Command::VerifySpectral(a) => a.run.manifest.clone(),
        Command::TheoremCheck(a) => a.run.manifest.clone(),
        Command::Train(a) => a.run.manifest.clone(),
        Command::QSweep(a) => a.run.manifest.clone(),
        Command::Replay(_) => None,
    }
    .unwrap_or_else(|| commands::default_manifest(&cli.command))
}

/// Re-runs the subcommand recorded in a manifest and compares every
/// recorded result and artifact digest.
fn replay(r: &ReplayArgs) -> u8 {
    let original = match fs::read_to_string(&r.source).map_err(|e| e.to_string()).and_then(|t| Manifest::parse(&t)) {
        Ok(m) => m,
        Err(e) => {
            eprintln!("error: {}: {e}", r.source.display());
            return EXIT_USAGE;
        }
    };
    let Some(subcommand) = original.get("subcommand") else {
        eprintln!("error: {} names no subcommand", r.source.display());
        return EXIT_USAGE;
    };
    for (path, digest) in original.inputs() {
        match file_digest(&path) {
            Ok(d) if d == digest => {}
            Ok(_) => {
                eprintln!("input {} changed since the recorded run", path.display());
                return EXIT_CHECK;
            }
            Err(e) => {
                eprintln!("error: {}: {e}", path.display());
                return EXIT_USAGE;
            }
        }
    }

    let target = r.manifest.clone().unwrap_or_else(|| commands::with_suffix(&r.source, ".replay"));
    let mut argv: Vec<OsString> = vec!["dshn".into(), subcommand.into()];
    argv.extend(original.flags().into_iter().map(|(k, v)| OsString::from(format!("--{k}={v}"))));
    argv.push(format!("--manifest={}", target.display()).into());
    let (cli, matches) = match parse(argv) {
        Ok(p) => p,
        Err(code) => return code,
    };
    let (_, again) = execute(&cli, &matches);

    let expected = original.reproducible();
    let mut mismatches = 0;
    for (key, value) in &expected {
        match again.get(key) {
            Some(v) if v == value => {}
            other => {
                mismatches += 1;
                eprintln!("mismatch {key}: recorded {value}, replayed {}", other.unwrap_or("<missing>"));
            }
        }
    }
    if mismatches == 0 {
        println!("replay identical: {} values", expected.len());
        EXIT_OK
    } else {
        println!("replay differs in {mismatches} of {} values", expected.len());
        EXIT_CHECK
    }
}
