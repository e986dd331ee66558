mod args;
mod commands;
mod output;
mod parse;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::Parser;
use serde::Serialize;
use serde_json::Value;

use args::{Cli, Command, FixturesCommand};
use output::{Manifest, Report};
use parse::Usage;

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().skip(1).collect();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    match run(cli, argv) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

/// 2 for bad input, 1 for everything that went wrong at run time.
fn exit_code(e: &anyhow::Error) -> u8 {
    if e.downcast_ref::<Usage>().is_some() {
        return 2;
    }
    match e.downcast_ref::<ldpu_core::Error>() {
        Some(err) if err.is_validation() => 2,
        _ => 1,
    }
}

fn run(cli: Cli, argv: Vec<String>) -> anyhow::Result<()> {
    if let Some(n) = cli.global.threads {
        if n == 0 {
            return Err(Usage("--threads must be at least 1".into()).into());
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    if let Command::Replay(r) = &cli.command {
        return replay(&r.manifest, r.check);
    }
    execute(&cli, argv, false)
}

fn params<T: Serialize>(name: &str, args: &T) -> (String, Value) {
    (name.to_string(), serde_json::to_value(args).expect("arguments serialize"))
}

fn dispatch(cli: &Cli) -> anyhow::Result<(String, Value, Report)> {
    let seed = cli.global.seed;
    let (name, p) = match &cli.command {
        Command::Concentration(a) => params("concentration", a),
        Command::Radius(a) => params("radius", a),
        Command::Hyperrect(a) => params("hyperrect", a),
        Command::Quantify(a) => params("quantify", a),
        Command::SelectEps(a) => params("select-eps", a),
        Command::Sweep(a) => params("sweep", a),
        Command::Empirical(a) => params("empirical", a),
        Command::Compare(a) => params("compare", a),
        Command::Fixtures(FixturesCommand::Export(a)) => params("fixtures export", a),
        Command::Replay(_) => unreachable!("replay is handled before dispatch"),
    };
    let report = match &cli.command {
        Command::Concentration(a) => commands::concentration(a),
        Command::Radius(a) => commands::radius(a, seed),
        Command::Hyperrect(a) => commands::hyperrect(a, seed),
        Command::Quantify(a) => commands::quantify(a, seed),
        Command::SelectEps(a) => commands::select_eps(a, seed),
        Command::Sweep(a) => commands::sweep_cmd(a),
        Command::Empirical(a) => commands::empirical(a, seed),
        Command::Compare(a) => commands::compare_cmd(a, seed),
        Command::Fixtures(FixturesCommand::Export(a)) => commands::export(a),
        Command::Replay(_) => unreachable!(),
    }?;
    Ok((name, p, report))
}

/// Runs `cli`; with `check`, compares against the recorded output instead of writing it.
fn execute(cli: &Cli, mut argv: Vec<String>, check: bool) -> anyhow::Result<()> {
    let (command, parameters, report) = dispatch(cli)?;
    let text = report.render(cli.global.format)?;
    let g = &cli.global;

    if check {
        let out = g.out.as_ref().ok_or_else(|| anyhow!("the manifest records no output file to check"))?;
        let recorded = std::fs::read_to_string(out).with_context(|| format!("cannot read {}", out.display()))?;
        if recorded != text {
            return Err(anyhow!("replayed output differs from {}", out.display()));
        }
        println!("{} reproduced byte for byte", out.display());
        return Ok(());
    }

    match &g.out {
        Some(out) => std::fs::write(out, &text).with_context(|| format!("cannot write {}", out.display()))?,
        None => print!("{text}"),
    }
    let manifest_path = g.manifest.clone().or_else(|| g.out.as_deref().map(Manifest::path_for));
    if let Some(path) = manifest_path {
        // pin the seed so a replay does not depend on the environment
        if !argv.iter().any(|a| a == "--seed" || a.starts_with("--seed=")) {
            argv.extend(["--seed".to_string(), g.seed.to_string()]);
        }
        let mut outputs: Vec<PathBuf> = g.out.iter().cloned().collect();
        outputs.extend(report.files.iter().cloned());
        Manifest {
            command,
            parameters,
            argv,
            seed: g.seed,
            format: g.format,
            version: env!("CARGO_PKG_VERSION").to_string(),
            outputs,
        }
        .write(&path)?;
    }
    Ok(())
}

fn replay(path: &std::path::Path, check: bool) -> anyhow::Result<()> {
    let m = Manifest::read(path)?;
    let cli = Cli::try_parse_from(std::iter::once("ldpu".to_string()).chain(m.argv.iter().cloned()))
        .map_err(|e| Usage(format!("manifest arguments do not parse: {}", e.to_string().trim())))?;
    if matches!(cli.command, Command::Replay(_)) {
        return Err(Usage("a manifest cannot replay another manifest".into()).into());
    }
    execute(&cli, m.argv, check)
}
