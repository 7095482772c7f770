fn main() {
    std::process::exit(timechange::cli::run_cli(std::env::args_os()));
}
