fn main() {
    std::process::exit(randmatch::cli::cli_main(std::env::args_os()));
}
