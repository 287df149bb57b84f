use std::process::ExitCode;

fn main() -> ExitCode {
    let code = match qmeter_cli::parse_args(std::env::args_os()) {
        Ok(cfg) => qmeter_cli::execute(&cfg),
        Err(qmeter_cli::ParseError::Info(text)) => {
            print!("{text}");
            0
        }
        Err(err) => {
            eprintln!("qmeter: {err}");
            err.exit_code()
        }
    };
    ExitCode::from(code as u8)
}
