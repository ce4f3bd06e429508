fn main() {
    std::process::exit(fepreint::cli::main_with_args(std::env::args_os()));
}
