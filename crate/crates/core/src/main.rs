fn main() {
    std::process::exit(cohomlab::cli::run(std::env::args_os()));
}
