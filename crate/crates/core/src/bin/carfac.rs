use clap::Parser;

fn main() {
    let cli = carfac::cli::Cli::parse();
    let mut out = std::io::stdout().lock();
    match carfac::cli::execute(&cli, &mut out) {
        Ok(()) => {}
        // a closed pipe (e.g. `| head`) is a normal way to stop reading
        Err(e) if e.is_broken_pipe() => {}
        Err(e) => {
            eprintln!("carfac: {e}");
            std::process::exit(1);
        }
    }
}
