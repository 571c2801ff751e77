fn main() {
    std::process::exit(singular_pmp_cli::main_with_args(std::env::args_os()));
}
