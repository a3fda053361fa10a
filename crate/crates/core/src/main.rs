fn main() {
    std::process::exit(polaron::cli::main());
}
