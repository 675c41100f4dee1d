fn main() {
    std::process::exit(nilcohom_cli::run(std::env::args()));
}
