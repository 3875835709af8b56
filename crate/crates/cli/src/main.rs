use clap::Parser;
use ellipse_calib_cli::{exit, run, Cli};

fn main() {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("ELLIPSE_CALIB_LOG", "warn")).init();
    let cli = Cli::parse();
    let code = match run(cli) {
        Ok(()) => exit::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    };
    std::process::exit(code);
}
