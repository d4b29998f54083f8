use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use pceks::{run, Mode, RunConfig};

fn main() -> ExitCode {
    let config = match RunConfig::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    let report = match run(&config) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    let mut stdout = std::io::stdout().lock();
    let _ = stdout.write_all(report.emit(config.format).as_bytes());
    if config.mode == Mode::SoundnessCheck && !report.sound() {
        return ExitCode::from(2);
    }
    ExitCode::SUCCESS
}
