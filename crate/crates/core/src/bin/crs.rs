fn main() -> std::process::ExitCode {
    crs_core::cli::main_with_args(std::env::args_os())
}
