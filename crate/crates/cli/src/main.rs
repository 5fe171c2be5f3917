fn main() {
    std::process::exit(uanet_cli::cli::run(std::env::args_os()));
}
