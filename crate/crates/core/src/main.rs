use clap::Parser;

fn main() {
    let cli = rgsim::cli::Cli::parse();
    std::process::exit(rgsim::cli::run(cli));
}
