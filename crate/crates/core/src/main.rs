fn main() {
    std::process::exit(stochhom::cli::run(std::env::args_os()));
}
