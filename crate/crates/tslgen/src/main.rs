fn main() {
    std::process::exit(tslgen::cli::run(std::env::args_os()));
}
