fn main() {
    std::process::exit(persona_gauge::cli::main());
}
