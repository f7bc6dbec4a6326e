fn main() {
    std::process::exit(fieldlab_cli::run());
}
