use clap::Parser;
use diffrate_cli::{run, Cli};

fn main() {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(warnings) => {
            for w in warnings {
                eprintln!("warning: {w}");
            }
        }
        Err(e) => {
            eprintln!("diffrate: {e}");
            std::process::exit(e.exit_code());
        }
    }
}
