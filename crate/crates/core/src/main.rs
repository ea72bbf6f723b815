use clap::Parser;

use panel_ecm::cli::{error_kind, exit_code, run, Cli};

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    if let Err(e) = run(Cli::parse()) {
        eprintln!("error[{}]: {e}", error_kind(&e));
        std::process::exit(exit_code(&e));
    }
}
