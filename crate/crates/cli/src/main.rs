use std::process::ExitCode;

fn main() -> ExitCode {
    match wtn_cli::run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(wtn_cli::exit_code(&err) as u8)
        }
    }
}
