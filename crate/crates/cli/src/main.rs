fn main() {
    std::process::exit(fenc_cli::run(std::env::args_os()));
}
