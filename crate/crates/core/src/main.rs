fn main() {
    std::process::exit(acdyn::cli::run(std::env::args_os()));
}
