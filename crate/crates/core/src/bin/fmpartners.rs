fn main() {
    std::process::exit(fmpartners::cli::run(std::env::args_os()));
}
