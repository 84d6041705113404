use std::process::ExitCode;

fn main() -> ExitCode {
    bicm_cli::main_with(std::env::args_os())
}
