use std::process::ExitCode;

fn main() -> ExitCode {
    if rosl_validation::run_all() == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
