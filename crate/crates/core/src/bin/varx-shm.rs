fn main() {
    std::process::exit(varx_shm::cli::run(std::env::args_os()));
}
