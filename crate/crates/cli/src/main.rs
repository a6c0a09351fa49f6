fn main() {
    std::process::exit(resolab::main_with_args(std::env::args_os()));
}
