fn main() {
    std::process::exit(motion_gan::cli::run(std::env::args_os()));
}
