use clap::Parser;

fn main() {
    let args = ppdef::cli::Args::parse();
    std::process::exit(ppdef::cli::main_with(args));
}
