fn main() {
    std::process::exit(rmsdyn_cli::main_with_args(std::env::args_os()));
}
