fn main() {
    std::process::exit(perfusion_roi::cli::run(std::env::args_os()));
}
