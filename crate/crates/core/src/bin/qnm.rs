fn main() {
    std::process::exit(qnm_core::cli::main());
}
