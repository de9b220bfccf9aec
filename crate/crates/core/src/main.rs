fn main() {
    std::process::exit(specv::harness::cli::run(std::env::args_os()));
}
