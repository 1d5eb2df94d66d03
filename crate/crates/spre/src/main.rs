fn main() {
    std::process::exit(spre::cli::cli_main(std::env::args_os()));
}
