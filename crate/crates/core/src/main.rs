fn main() {
    std::process::exit(spintime::cli::main_with_args(std::env::args_os()));
}
