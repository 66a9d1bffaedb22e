fn main() {
    std::process::exit(diachron::cli::run(std::env::args_os()));
}
