use clap::error::ErrorKind;
use clap::Parser;
use jcphase_cli::{execute, Cli};

/// Exit status for malformed command lines, shared with configuration errors.
const USAGE_EXIT: i32 = 3;

fn main() {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => USAGE_EXIT,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    match execute(&cli) {
        Ok(Some(text)) => print!("{text}"),
        Ok(None) => {}
        Err(e) => {
            eprintln!("jcphase: {e}");
            std::process::exit(e.exit_code());
        }
    }
}
