fn main() {
    std::process::exit(pcpmc::cli::run());
}
