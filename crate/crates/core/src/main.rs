use clap::Parser;

use wlee_depth::cli::{run, Cli, EXIT_USAGE};

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => e.exit(),
        Err(e) => {
            // clap's own usage code collides with "no roots"
            let _ = e.print();
            std::process::exit(EXIT_USAGE);
        }
    };
    std::process::exit(run(&cli));
}
