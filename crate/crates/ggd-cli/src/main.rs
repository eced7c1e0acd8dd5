use clap::Parser;

fn main() {
    let cli = ggd_cli::Cli::parse();
    if let Err(err) = ggd_cli::run(cli) {
        eprintln!("{}", ggd_cli::error_line(&err));
        std::process::exit(ggd_cli::exit_code_for(&err));
    }
}
