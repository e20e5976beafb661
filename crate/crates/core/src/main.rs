fn main() {
    std::process::exit(wolffkit::cli::main_with(std::env::args_os()));
}
