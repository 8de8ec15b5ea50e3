fn main() {
    std::process::exit(regex_evolve::cli::run(std::env::args_os()));
}
