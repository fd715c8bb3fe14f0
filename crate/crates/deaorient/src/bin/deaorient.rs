use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(deaorient::cli::run(std::env::args()) as u8)
}
