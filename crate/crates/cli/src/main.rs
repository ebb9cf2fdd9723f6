fn main() {
    std::process::exit(poprec_cli::run(std::env::args()));
}
