fn main() {
    std::process::exit(bpump::cli::run());
}
