fn main() {
    std::process::exit(spectral_tower::cli::run(std::env::args_os()));
}
