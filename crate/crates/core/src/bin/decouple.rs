fn main() {
    std::process::exit(decouple_core::cli::main_with_args(std::env::args_os()));
}
