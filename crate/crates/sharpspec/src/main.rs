fn main() {
    std::process::exit(sharpspec::cli::run());
}
