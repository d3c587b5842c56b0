fn main() {
    std::process::exit(qevent::cli::run(std::env::args_os()));
}
