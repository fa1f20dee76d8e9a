use std::process::ExitCode;

fn main() -> ExitCode {
    junction::cli::main_with_args(std::env::args_os())
}
