fn main() {
    std::process::exit(kirchhoff_cli::main_with_args(std::env::args_os()));
}
