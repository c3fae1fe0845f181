fn main() {
    std::process::exit(thermocap_cli::main_with_args(std::env::args_os()));
}
