use std::process::ExitCode;

use clap::Parser;
use sqzlab_cli::{init_threads, run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = init_threads().and_then(|_| run(cli));
    match result {
        Ok(report) => {
            for m in &report.messages {
                println!("{m}");
            }
            println!("wrote {} file(s) to {}", report.manifest.outputs.len() + 1, report.out_dir.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("sqzlab: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
