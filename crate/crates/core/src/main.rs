fn main() {
    std::process::exit(qv_shadow::cli::main_with_args(std::env::args_os()));
}
