fn main() {
    std::process::exit(nvscope::cli::run(std::env::args_os()));
}
