fn main() -> std::process::ExitCode {
    temporal_noise::cli::main_with(std::env::args_os())
}
