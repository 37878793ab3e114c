use clap::Parser;
use sijc::{run_cli, Cli, OUTPUT_DIR_ENV};

fn main() {
    let cli = Cli::parse();
    let dir = std::env::var_os(OUTPUT_DIR_ENV).filter(|v| !v.is_empty()).map(Into::into);
    std::process::exit(run_cli(&cli, dir));
}
