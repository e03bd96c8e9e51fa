fn main() {
    std::process::exit(plsb_cli::run());
}
