fn main() {
    std::process::exit(progq_cli::run(std::env::args_os()));
}
