use clap::Parser;

mod cache;
mod config;
mod grid;
mod rows;
mod runner;

fn main() {
    let args = config::CliArgs::parse();
    let cfg = match config::RunConfig::from_args(args) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e:#}");
            std::process::exit(2);
        }
    };
    if let Err(e) = runner::run(&cfg) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
