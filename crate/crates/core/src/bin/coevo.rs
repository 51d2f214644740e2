fn main() {
    std::process::exit(coevo::cli::main_with_args(std::env::args_os()));
}
