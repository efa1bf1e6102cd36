fn main() {
    std::process::exit(wie_cli::run(std::env::args_os()));
}
