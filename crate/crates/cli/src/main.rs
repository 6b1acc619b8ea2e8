fn main() {
    std::process::exit(glvortex_cli::run(std::env::args_os()));
}
