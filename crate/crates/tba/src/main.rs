fn main() {
    std::process::exit(tba::shell::cli_main(std::env::args_os()));
}
