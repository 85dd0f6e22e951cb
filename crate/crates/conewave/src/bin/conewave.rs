fn main() {
    std::process::exit(conewave::cli::main_with_args(std::env::args_os()));
}
