use std::process::ExitCode;

fn main() -> ExitCode {
    tom2_cli::main_with_args(
        std::env::args_os(),
        &mut std::io::stdout(),
        &mut std::io::stderr(),
    )
}
