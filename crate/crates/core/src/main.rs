use clap::Parser;

use parabose::cli::{run, Cli, RunConfig};

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let outcome = RunConfig::from_cli(cli).and_then(|config| run(&config));
    match outcome {
        Ok((data, sidecar)) => println!("{}\n{}", data.display(), sidecar.display()),
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(e.exit_code());
        }
    }
}
