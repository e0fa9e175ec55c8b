use std::io::Write;
use std::process::ExitCode;

use clap::Parser;

use stattest_cli::error::exit;
use stattest_cli::{run, Cli};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // clap uses 2 for usage errors, which is reserved for not-SQ here
            return ExitCode::from(if e.use_stderr() { exit::IO } else { exit::OK });
        }
    };
    let (code, out, err) = run(&cli);
    print!("{out}");
    eprint!("{err}");
    let _ = std::io::stdout().flush();
    ExitCode::from(code)
}
