fn main() {
    std::process::exit(hfpc_cli::run(std::env::args_os()));
}
