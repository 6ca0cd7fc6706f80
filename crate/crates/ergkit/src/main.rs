use std::process::ExitCode;

fn main() -> ExitCode {
    ergkit::cli::run(std::env::args())
}
