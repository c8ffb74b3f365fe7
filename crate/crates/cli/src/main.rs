fn main() {
    std::process::exit(hessdecay_cli::run(std::env::args_os()));
}
