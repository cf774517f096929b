fn main() {
    std::process::exit(fbdsde::cli::run(std::env::args_os()));
}
