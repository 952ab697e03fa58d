fn main() {
    std::process::exit(gasnet::io::cli::run_cli(std::env::args_os()));
}
