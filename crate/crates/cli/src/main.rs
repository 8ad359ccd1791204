fn main() {
    std::process::exit(tempered_fpe_cli::main_with_args(std::env::args_os()));
}
