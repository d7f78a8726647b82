fn main() {
    std::process::exit(gwdetect::cli::run(std::env::args_os()));
}
