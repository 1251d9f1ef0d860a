use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(oeq::cli::run(std::env::args_os()))
}
