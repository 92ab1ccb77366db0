fn main() {
    std::process::exit(coevolve_cli::run(std::env::args_os()));
}
