fn main() {
    std::process::exit(teachplay::cli::run(std::env::args_os()));
}
