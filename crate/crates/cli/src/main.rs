fn main() {
    std::process::exit(entangle_cli::main_with_args(std::env::args_os()));
}
