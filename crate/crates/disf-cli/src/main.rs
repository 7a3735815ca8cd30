use clap::Parser;
use disf_cli::Cli;

fn main() {
    let cli = Cli::parse();
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("DISF_LOG", "warn"))
        .format_timestamp(None)
        .init();
    if let Err(error) = disf_cli::run(&cli) {
        eprintln!("{}", disf_cli::error_json(&error));
        std::process::exit(disf_cli::exit_code(&error));
    }
}
