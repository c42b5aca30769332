fn main() {
    std::process::exit(smallworld_cli::run(std::env::args_os()));
}
