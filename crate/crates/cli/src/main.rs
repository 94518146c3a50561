fn main() {
    std::process::exit(vcrobust_cli::run(std::env::args_os()));
}
