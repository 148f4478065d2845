use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(smog::cli::run(std::env::args_os()))
}
