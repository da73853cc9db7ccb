//! Experiment driver: VQE on Ising or file-loaded Hamiltonians, fidelity
//! maximization, unitary compilation and compiled-circuit dynamics, with
//! multi-seed orchestration and CSV trajectory export.

mod config;
mod experiments;
mod output;
mod selftest;

use clap::Parser;

fn main() {
    let cli = config::Cli::parse();
    match experiments::dispatch(cli) {
        Ok(()) => {}
        Err(err) => {
            eprintln!("error: {err:#}");
            std::process::exit(1);
        }
    }
}
