fn main() {
    std::process::exit(sonolink::cli::run(std::env::args_os()));
}
