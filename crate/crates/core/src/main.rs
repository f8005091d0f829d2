fn main() {
    std::process::exit(fclloop::cli::main());
}
