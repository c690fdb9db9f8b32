fn main() {
    std::process::exit(sib_cli::main_with(std::env::args_os()));
}
