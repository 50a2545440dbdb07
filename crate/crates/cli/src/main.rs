fn main() {
    std::process::exit(glv_surgery_cli::main_with_args(std::env::args_os()));
}
