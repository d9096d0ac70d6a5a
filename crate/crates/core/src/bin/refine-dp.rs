fn main() {
    std::process::exit(refine_dp::cli::run(std::env::args_os()));
}
