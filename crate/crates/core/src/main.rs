use std::process::ExitCode;

fn main() -> ExitCode {
    borchers_lab::cli::main_with(std::env::args_os())
}
