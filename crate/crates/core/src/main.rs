fn main() {
    std::process::exit(fieldwork::cli::main_entry());
}
