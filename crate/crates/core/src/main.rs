use std::process::ExitCode;

fn main() -> ExitCode {
    let status = match hopkernel::cli::parse_args(std::env::args_os()) {
        Ok(config) => hopkernel::cli::execute(&config),
        Err(usage) => {
            if usage.exit_code == 0 {
                print!("{}", usage.message);
            } else {
                eprint!("{}", usage.message);
            }
            usage.exit_code
        }
    };
    ExitCode::from(status as u8)
}
