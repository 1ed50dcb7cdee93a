fn main() {
    std::process::exit(dicert::cli::run(std::env::args_os()));
}
