fn main() {
    std::process::exit(scaling_frontier::cli::run());
}
