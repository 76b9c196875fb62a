fn main() {
    std::process::exit(chronolm::cli::run(std::env::args_os()));
}
