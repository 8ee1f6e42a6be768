fn main() {
    let args: Vec<String> = std::env::args().collect();
    std::process::exit(lambda_forest::cli::run(&args));
}
