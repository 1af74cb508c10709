fn main() {
    std::process::exit(nlheat::harness::cli::main(std::env::args_os()));
}
