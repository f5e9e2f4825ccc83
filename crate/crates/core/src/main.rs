use std::io;
use std::process::ExitCode;

fn main() -> ExitCode {
    let code = volterra_mnc::cli::run(std::env::args_os(), &mut io::stdout(), &mut io::stderr());
    ExitCode::from(code.code())
}
