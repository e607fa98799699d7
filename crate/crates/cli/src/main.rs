fn main() {
    std::process::exit(hicmapper_cli::main_with_args(std::env::args_os()));
}
