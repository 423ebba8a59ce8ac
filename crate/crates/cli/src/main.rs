fn main() {
    std::process::exit(cmc_cli::run(std::env::args_os()));
}
