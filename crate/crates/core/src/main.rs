fn main() {
    std::process::exit(vtolsim::cli::run(std::env::args_os()));
}
