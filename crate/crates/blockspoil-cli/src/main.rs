use clap::Parser;

use blockspoil_cli::run::{dispatch, Cli};

fn main() {
    // clap exits with code 2 on usage errors, matching the parse contract.
    let cli = Cli::parse();
    if let Err(err) = dispatch(cli) {
        eprintln!("error: {err}");
        std::process::exit(err.exit_code());
    }
}
