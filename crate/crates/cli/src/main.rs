fn main() {
    std::process::exit(czlab_cli::run());
}
