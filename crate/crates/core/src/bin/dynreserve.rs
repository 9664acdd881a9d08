fn main() {
    std::process::exit(dynamic_reserve::cli::main_with_args(std::env::args_os()));
}
