fn main() {
    // CLI wiring lands with the experiment drivers.
    eprintln!("detwave: no subcommand given");
    std::process::exit(2);
}
