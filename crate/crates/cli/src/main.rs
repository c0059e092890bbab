use std::io::{stderr, stdout};
use std::process::ExitCode;

fn main() -> ExitCode {
    // Unlocked handles: worker threads log to stderr while a command runs.
    let code = minipatch_cli::run_cli(std::env::args_os(), &mut stdout(), &mut stderr());
    ExitCode::from(code as u8)
}
