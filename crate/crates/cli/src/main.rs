use clap::Parser;

fn main() {
    let cli = nvspin_cli::Cli::parse();
    if let Err(e) = nvspin_cli::run(&cli) {
        eprintln!("nvspin: {e}");
        std::process::exit(e.exit_code());
    }
}
