fn main() {
    std::process::exit(cbw_cli::run(std::env::args_os()));
}
