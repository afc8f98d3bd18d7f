fn main() {
    std::process::exit(bvattack::cli::run(std::env::args_os()));
}
