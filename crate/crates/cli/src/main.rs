use std::process::ExitCode;

fn main() -> ExitCode {
    let result = gcl_datalab::parse(std::env::args_os()).and_then(|parsed| match parsed {
        Ok(cli) => gcl_datalab::execute(cli),
        Err(text) => {
            print!("{text}");
            Ok(gcl_datalab::Outcome::default())
        }
    });
    match result {
        Ok(out) => {
            for w in &out.warnings {
                eprintln!("warning: {w}");
            }
            for line in &out.stdout {
                println!("{line}");
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
