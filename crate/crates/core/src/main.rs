fn main() {
    std::process::exit(nonclassical::cli::main_with_args(std::env::args_os()));
}
