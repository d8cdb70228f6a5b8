fn main() {
    std::process::exit(blowup_lab::cli::run_args(std::env::args_os()));
}
