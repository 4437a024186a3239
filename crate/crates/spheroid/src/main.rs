fn main() {
    std::process::exit(spheroid::cli::run(std::env::args_os()));
}
