mod args;
mod commands;
mod error;

use clap::Parser;

use args::{Cli, Command};
use commands::Sink;
use error::CliError;

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Usage("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    let sink = Sink { out: cli.out.as_deref(), seed: cli.seed };
    match &cli.command {
        Command::Density(a) => commands::density(a, &sink),
        Command::Invert(a) => commands::invert_cmd(a, &sink),
        Command::Decompose(a) => commands::decompose(a, &sink),
        Command::Simulate(a) => commands::simulate(a, &sink),
        Command::Empirical(a) => commands::empirical(a, &sink),
        Command::SpecfunEval(a) => {
            println!("{}", commands::specfun_eval(a)?);
            Ok(())
        }
    }
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    if let Err(e) = run(Cli::parse()) {
        eprintln!("error: {e}");
        std::process::exit(e.code());
    }
}
