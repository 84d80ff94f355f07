fn main() {
    std::process::exit(vmo_extension::cli::main_with_args(std::env::args_os()));
}
