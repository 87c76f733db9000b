fn main() {
    std::process::exit(obmimo::cli::run(std::env::args().collect()));
}
