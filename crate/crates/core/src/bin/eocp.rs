fn main() {
    std::process::exit(eocp::cli::run(std::env::args_os()));
}
