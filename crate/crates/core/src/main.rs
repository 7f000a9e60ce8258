use std::process::ExitCode;

fn main() -> ExitCode {
    let code = datareq::cli::main_with_args(std::env::args_os());
    ExitCode::from(code.clamp(0, 255) as u8)
}
