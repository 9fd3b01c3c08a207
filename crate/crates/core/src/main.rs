fn main() {
    std::process::exit(koenigs::cli::run(std::env::args_os()));
}
