fn main() {
    std::process::exit(mueller_stokes::cli::run());
}
