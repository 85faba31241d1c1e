fn main() {
    std::process::exit(quadreg_cli::run(std::env::args_os()));
}
