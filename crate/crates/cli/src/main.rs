// SPDX-License-Identifier: MIT OR Apache-2.0

use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(srkit_cli::run(std::env::args_os()))
}
