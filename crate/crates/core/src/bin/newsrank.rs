fn main() {
    std::process::exit(newsrank::cli::main());
}
