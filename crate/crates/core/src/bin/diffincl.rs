fn main() {
    std::process::exit(diffincl::cli::main());
}
