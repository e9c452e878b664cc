fn main() {
    std::process::exit(commentforge::cli::run(std::env::args_os()));
}
