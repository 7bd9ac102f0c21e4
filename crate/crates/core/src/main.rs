use clap::Parser;

fn main() {
    let cli = qrenyi::cli::Cli::parse();
    std::process::exit(qrenyi::cli::run(cli));
}
