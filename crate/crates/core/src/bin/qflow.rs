use quermass_flow::cli::{main_with, LibraryTrig};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let code = main_with(&args, &mut std::io::stdout(), &mut std::io::stderr(), &LibraryTrig);
    std::process::exit(code);
}
