mod args;
mod commands;
mod error;

use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use serde_json::{json, Value};

use args::{merge, Cli, Command};
use error::CliError;

fn params<T: serde::Serialize>(t: &T) -> Result<Value, CliError> {
    Ok(serde_json::to_value(t)?)
}

fn run(cli: &Cli) -> Result<(Value, bool), CliError> {
    if let Some(t) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| CliError::Usage(format!("thread pool: {e}")))?;
    }
    let file: Option<Value> = match &cli.config {
        Some(p) => Some(serde_json::from_str(&std::fs::read_to_string(p)?)?),
        None => None,
    };
    let file = file.as_ref();
    macro_rules! dispatch {
        ($name:literal, $args:expr, $f:path) => {{
            let a = merge($args, file)?;
            ($name, params(&a)?, $f(&a)?, true)
        }};
    }
    let (name, p, result, ok) = match &cli.command {
        Command::Heegner(a) => dispatch!("heegner", a, commands::heegner),
        Command::Classreps(a) => dispatch!("classreps", a, commands::classreps),
        Command::Eval(a) => dispatch!("eval", a, commands::eval),
        Command::Fourier(a) => dispatch!("fourier", a, commands::fourier),
        Command::Poincare(a) => dispatch!("poincare", a, commands::poincare),
        Command::Hecke(a) => dispatch!("hecke", a, commands::hecke),
        Command::Pairing(a) => dispatch!("pairing", a, commands::pairing_cmd),
        Command::Zeta(a) => dispatch!("zeta", a, commands::zeta),
        Command::Check(a) => {
            let a = merge(a, file)?;
            let (r, ok) = commands::check(&a)?;
            ("check", params(&a)?, r, ok)
        }
    };
    let out = json!({
        "schema": "maass-periods/1",
        "command": name,
        "seed": cli.seed,
        "params": p,
        "result": result,
    });
    Ok((out, ok))
}

fn emit(cli: &Cli, v: &Value) -> Result<(), CliError> {
    let mut s = serde_json::to_string_pretty(v)?;
    s.push('\n');
    match &cli.out {
        Some(p) => std::fs::write(p, s)?,
        None => std::io::stdout().write_all(s.as_bytes())?,
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = run(&cli).and_then(|(v, ok)| {
        emit(&cli, &v)?;
        Ok(ok)
    });
    match res {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("error: acceptance check failed");
            ExitCode::from(3)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
