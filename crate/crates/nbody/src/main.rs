fn main() {
    std::process::exit(nbody::cli::run());
}
