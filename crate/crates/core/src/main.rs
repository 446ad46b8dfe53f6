fn main() {
    std::process::exit(gopp::cli::run(std::env::args_os()));
}
