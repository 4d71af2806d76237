fn main() {
    std::process::exit(adiarank::cli::main());
}
