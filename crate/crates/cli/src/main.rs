fn main() -> std::process::ExitCode {
    herding_cli::app::main_with_args(std::env::args_os())
}
