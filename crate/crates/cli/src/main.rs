fn main() {
    std::process::exit(qagg_cli::run_cli(std::env::args_os()));
}
