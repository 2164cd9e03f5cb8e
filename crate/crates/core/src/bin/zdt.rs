fn main() {
    std::process::exit(zdt::cli::main_exit_code());
}
