fn main() {
    std::process::exit(distill_parse::cli::main_with(std::env::args_os()));
}
