fn main() {
    std::process::exit(stdcoder_cli::run(std::env::args_os().skip(1)));
}
