use std::io;

fn main() {
    let code = lcu_core::experiments::cli::run_cli(std::env::args_os(), &mut io::stdout(), &mut io::stderr());
    std::process::exit(code);
}
