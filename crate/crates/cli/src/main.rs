fn main() {
    std::process::exit(vocomp_cli::run(std::env::args_os()));
}
