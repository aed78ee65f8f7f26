fn main() {
    let argv: Vec<String> = std::env::args().collect();
    std::process::exit(focal_cli::run(&argv));
}
