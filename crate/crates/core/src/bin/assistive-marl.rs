fn main() {
    std::process::exit(assistive_marl::cli::run_command(std::env::args_os()));
}
