use std::process::ExitCode;

use scm_obi::cli::{exit_code, parse_config, run_command, Invocation, EXIT_OK};

fn main() -> ExitCode {
    let code = match parse_config(std::env::args_os()) {
        Ok(Invocation::Info(text)) => {
            print!("{text}");
            EXIT_OK
        }
        Ok(Invocation::Run(command, cfg)) => match run_command(&cfg, command) {
            Ok(out) => {
                print!("{}", out.summary);
                for f in &out.files {
                    eprintln!("wrote {}", f.display());
                }
                EXIT_OK
            }
            Err(e) => {
                eprintln!("error: {e}");
                exit_code(&e)
            }
        },
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    };
    ExitCode::from(code as u8)
}
