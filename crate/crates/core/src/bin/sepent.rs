fn main() {
    std::process::exit(sepent::cli::main_with_args(std::env::args_os()));
}
