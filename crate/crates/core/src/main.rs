fn main() {
    std::process::exit(vqsqueeze::cli::run(std::env::args_os()));
}
