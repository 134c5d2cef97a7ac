use clap::Parser;

use treewalk::cli::{run, Cli};

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("treewalk: {e}");
        std::process::exit(e.exit_code());
    }
}
