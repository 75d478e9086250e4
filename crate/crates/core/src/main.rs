use clap::Parser;

fn main() {
    let cli = extmem::cli::Cli::parse();
    let mut stdout = std::io::stdout().lock();
    if let Err(e) = extmem::cli::dispatch(cli, &mut stdout) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
