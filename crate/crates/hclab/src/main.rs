fn main() {
    std::process::exit(hclab::cli::main_entry());
}
