fn main() {
    std::process::exit(abpole::cli::main_with_args(std::env::args_os()));
}
