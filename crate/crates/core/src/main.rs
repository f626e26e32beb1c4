fn main() {
    std::process::exit(dca::cli::main_with_args(std::env::args_os()));
}
