fn main() {
    std::process::exit(smbo_lab::cli::dispatch(std::env::args_os()));
}
