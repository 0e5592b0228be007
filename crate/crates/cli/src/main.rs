use std::process::ExitCode;

fn main() -> ExitCode {
    prisample::main_with(std::env::args_os())
}
