fn main() {
    std::process::exit(ghost_kron::cli::main_with_args(std::env::args_os()));
}
