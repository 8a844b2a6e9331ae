fn main() {
    std::process::exit(smmpc::cli::main(std::env::args_os()));
}
