fn main() {
    std::process::exit(sigfactor::run(std::env::args().collect()));
}
