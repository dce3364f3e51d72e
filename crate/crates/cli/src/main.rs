fn main() {
    std::process::exit(cross_tasep_cli::main_with(std::env::args_os()));
}
