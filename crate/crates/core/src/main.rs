fn main() {
    std::process::exit(guarded_proc::cli::run(std::env::args_os()));
}
