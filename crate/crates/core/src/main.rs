fn main() {
    std::process::exit(flipflop_core::cli::main_with_args(std::env::args_os()));
}
