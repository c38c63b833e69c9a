use std::io::Write;
use std::process::ExitCode;

fn main() -> ExitCode {
    let outcome = match catenoid_cli::run_with_args(std::env::args_os()) {
        Ok(o) => o,
        Err(e) => {
            if let Some(clap_err) = e.downcast_ref::<clap::Error>() {
                let _ = clap_err.print();
                return ExitCode::from(clap_err.exit_code() as u8);
            }
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    };
    for d in &outcome.diagnostics {
        eprintln!("diagnostic: {d}");
    }
    if outcome.written_to.is_none() {
        let mut stdout = std::io::stdout().lock();
        if stdout.write_all(outcome.text.as_bytes()).and_then(|_| stdout.flush()).is_err() {
            return ExitCode::from(2);
        }
    }
    ExitCode::from(outcome.exit_code.clamp(0, 255) as u8)
}
