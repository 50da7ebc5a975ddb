fn main() {
    std::process::exit(gs_core::cli::run(std::env::args_os()));
}
