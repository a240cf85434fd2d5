fn main() {
    std::process::exit(gapstat::cli::run(std::env::args_os()));
}
