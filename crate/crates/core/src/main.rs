fn main() {
    std::process::exit(landau_lab::cli::main_with_args(std::env::args_os()));
}
