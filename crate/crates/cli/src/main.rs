fn main() {
    std::process::exit(relkit_cli::run());
}
