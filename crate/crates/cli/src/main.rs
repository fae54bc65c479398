use std::io::Write;

use clap::Parser;
use repset::{execute, exit_code, Cli, Output};

fn main() {
    let cli = Cli::parse();
    let mut out = Output::default();
    let result = execute(&cli, &mut out);
    print!("{}", out.stdout);
    eprint!("{}", out.stderr);
    if let Err(e) = &result {
        eprintln!("error: {e}");
    }
    let _ = std::io::stdout().flush();
    std::process::exit(exit_code(&result));
}
