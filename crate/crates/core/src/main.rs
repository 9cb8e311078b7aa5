fn main() {
    std::process::exit(incore::cli::run());
}
