fn main() {
    ymh::parallel::init_from_env();
    std::process::exit(ymh::cli::main_with_args(std::env::args_os()));
}
