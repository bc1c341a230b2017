use std::process::ExitCode;

fn main() -> ExitCode {
    seltag::cli::main()
}
