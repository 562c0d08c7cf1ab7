fn main() {
    std::process::exit(beamsim::cli::run(std::env::args_os()));
}
