fn main() {
    std::process::exit(torusdet_cli::run(std::env::args_os()));
}
