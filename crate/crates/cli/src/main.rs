fn main() {
    std::process::exit(geoslice_cli::run(std::env::args_os()));
}
