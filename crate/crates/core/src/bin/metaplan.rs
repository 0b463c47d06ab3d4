fn main() {
    std::process::exit(metaplan::cli::run(std::env::args_os()));
}
