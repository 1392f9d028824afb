#![no_main]

use clap::Parser;
use libfuzzer_sys::fuzz_target;
use ugat_cli::Cli;

// Arguments are NUL-separated. Parsing must never panic; parsed commands
// are not executed.
fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let args = std::iter::once("ugat").chain(text.split('\0'));
    if let Ok(cli) = Cli::try_parse_from(args) {
        let _ = serde_json::to_string(&cli.command);
    }
});
