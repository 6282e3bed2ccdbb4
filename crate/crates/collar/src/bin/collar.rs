fn main() {
    std::process::exit(collar::cli::main_entry());
}
