fn main() {
    std::process::exit(gcause_cli::main_with_args(std::env::args_os()));
}
