fn main() {
    std::process::exit(vanishing_maxwell::cli::run_cli(std::env::args_os()));
}
