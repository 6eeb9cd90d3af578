fn main() {
    std::process::exit(nsoc_cli::run(std::env::args_os()));
}
