fn main() {
    std::process::exit(waveqed::cli::run());
}
