mod args;
mod commands;
mod report;

use std::io::Write;
use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;

use args::{Cli, Command, Format};
use report::{write_out, Failure, RunReport};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let started = Instant::now();
    let (seed, out_dir, format) = match &cli.command {
        Command::Simulate(a) => (None, a.common.out.clone(), a.common.format),
        Command::Jacobian(a) => (None, a.out.clone(), a.format),
        Command::Contraction(a) | Command::Partial(a) | Command::Oes(a) => {
            (Some(a.common.seed), a.common.out.clone(), a.common.format)
        }
        Command::OesEq(a) => (Some(a.check.common.seed), a.check.common.out.clone(), a.check.common.format),
        Command::Lyapunov(a) => (Some(a.seed), a.out.clone(), a.format),
        Command::Reproduce(a) => (Some(a.seed), a.out.clone(), a.format),
    };
    let outcome = match &cli.command {
        Command::Simulate(a) => commands::simulate(a),
        Command::Jacobian(a) => commands::jacobian(a),
        Command::Contraction(a) => commands::trajectory_check("contraction", a),
        Command::Partial(a) => commands::trajectory_check("partial", a),
        Command::Oes(a) => commands::trajectory_check("oes", a),
        Command::OesEq(a) => commands::oes_eq(a),
        Command::Lyapunov(a) => commands::lyapunov(a),
        Command::Reproduce(a) => commands::reproduce(a),
    };
    let outcome = match outcome {
        Ok(o) => o,
        Err(Failure { code, error }) => {
            eprintln!("error: {error:#}");
            return ExitCode::from(code as u8);
        }
    };
    if let Some(seed) = seed {
        eprintln!("seed: {seed}");
    }
    let report = RunReport::new(std::env::args().collect(), seed, started.elapsed().as_secs_f64(), &outcome);
    if let Some(dir) = &out_dir {
        if let Err(e) = write_out(dir, &outcome, &report) {
            eprintln!("error: {e:#}");
            return ExitCode::from(report::EXIT_NUMERICAL as u8);
        }
    }
    let body = match (format, &outcome.csv) {
        (Format::Csv, Some(csv)) => csv.clone(),
        _ => serde_json::to_string_pretty(&report).expect("report serializes") + "\n",
    };
    // a closed pipe (e.g. `| head`) is not an error worth reporting
    let _ = std::io::stdout().lock().write_all(body.as_bytes());
    ExitCode::from(outcome.exit as u8)
}
