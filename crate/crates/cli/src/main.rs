use std::io;
use std::process::ExitCode;

use kinematica_cli::{run, TOL_ENV};

fn main() -> ExitCode {
    let env_tol = std::env::var(TOL_ENV).ok();
    let code = run(std::env::args_os(), env_tol.as_deref(), &mut io::stdout().lock(), &mut io::stderr().lock());
    ExitCode::from(code as u8)
}
