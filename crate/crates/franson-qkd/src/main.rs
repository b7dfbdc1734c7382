fn main() {
    std::process::exit(franson_qkd::cli::run());
}
