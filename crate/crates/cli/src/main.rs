fn main() {
    std::process::exit(swarmtrack_cli::main_with(std::env::args_os()));
}
