use clap::Parser;

fn main() {
    let cli = femtosim_cli::Cli::parse();
    if let Err(e) = femtosim_cli::run(&cli) {
        eprintln!("femtosim: {e}");
        std::process::exit(e.exit_code());
    }
}
