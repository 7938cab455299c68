fn main() { std::process::exit(scalegnn::cli::run()); }
