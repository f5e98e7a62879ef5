fn main() {
    std::process::exit(ridge_sdr::cli::main_with_args(std::env::args_os()));
}
