fn main() {
    std::process::exit(emoxfer_cli::run(std::env::args_os()));
}
