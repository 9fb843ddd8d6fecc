fn main() {
    std::process::exit(prisk::cli::run(std::env::args_os()));
}
