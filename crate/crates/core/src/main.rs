fn main() {
    std::process::exit(stochopt::cli::main_with_args(std::env::args_os()));
}
