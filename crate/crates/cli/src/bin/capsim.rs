fn main() {
    std::process::exit(capture_cli::main_with(std::env::args_os()));
}
