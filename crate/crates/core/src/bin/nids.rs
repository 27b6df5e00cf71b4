fn main() {
    std::process::exit(nids_ensemble::cli::run_command(std::env::args_os()));
}
