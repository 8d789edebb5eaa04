use clap::Parser;

fn main() {
    let cli = gmlab::Cli::parse();
    std::process::exit(gmlab::run(cli));
}
