fn main() {
    std::process::exit(affinity_lab::cli::dispatch(std::env::args_os()));
}
