fn main() {
    std::process::exit(cwc::cli::run(std::env::args_os()));
}
