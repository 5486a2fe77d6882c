fn main() {
    std::process::exit(mmes::cli::dispatch(std::env::args_os()));
}
