fn main() {
    std::process::exit(cliquewatch::cli::main_with(std::env::args_os()));
}
