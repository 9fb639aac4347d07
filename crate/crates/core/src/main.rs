fn main() {
    std::process::exit(bve::cli::main_with_args(std::env::args_os()));
}
