use clap::Parser;
use std::process::ExitCode;
use std::time::Instant;

use qgame_cli::{emit, run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let start = Instant::now();
    let mut report = match run(&cli) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("qgame: {e}");
            return ExitCode::from(e.exit_code());
        }
    };
    if cli.timing {
        report.wall_time = Some(start.elapsed().as_secs_f64());
    }
    if let Err(e) = emit(&report, cli.output, cli.out.as_deref()) {
        eprintln!("qgame: {e}");
        return ExitCode::from(e.exit_code());
    }
    ExitCode::from(report.exit_code())
}
