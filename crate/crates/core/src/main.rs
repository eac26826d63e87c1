fn main() {
    std::process::exit(ifstrobe::cli::run(std::env::args_os()));
}
