fn main() {
    std::process::exit(epsim_cli::main_with_args(std::env::args_os()));
}
