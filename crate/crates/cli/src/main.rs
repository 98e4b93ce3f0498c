mod args;
mod commands;
mod error;
mod input;
mod output;

use clap::error::ErrorKind;
use clap::Parser;

use args::{Cli, Command};

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp
                | ErrorKind::DisplayVersion
                | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => 0,
                _ => 3,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    let result = match &cli.command {
        Command::Test(a) => commands::cmd_test(a),
        Command::Simulate(a) => commands::cmd_simulate(a),
        Command::NullStudy(a) => commands::cmd_null_study(a),
    };
    if let Err(e) = result {
        eprintln!("elgof: {e}");
        std::process::exit(e.exit_code());
    }
}
