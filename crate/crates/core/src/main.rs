fn main() {
    std::process::exit(echox::cli::main_with_args(std::env::args_os()));
}
