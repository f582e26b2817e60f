fn main() {
    std::process::exit(subtreegen::cli::run_from(std::env::args_os()));
}
