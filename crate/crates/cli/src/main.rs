fn main() {
    std::process::exit(egonet_cli::run(std::env::args_os()));
}
