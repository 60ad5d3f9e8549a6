fn main() {
    std::process::exit(qosprov::cli::main());
}
