fn main() {
    std::process::exit(cartan3::cli::run_from(std::env::args_os()));
}
