fn main() {
    std::process::exit(olim::cli::run_cli(std::env::args_os()));
}
