//! Experiment configs are the main untrusted input; parsing must never
//! panic, whatever the bytes.

#![no_main]

use libfuzzer_sys::fuzz_target;

use qkinet_cli::config::ExperimentConfig;

fuzz_target!(|data: &[u8]| {
    let text = String::from_utf8_lossy(data);
    let _ = ExperimentConfig::parse_str(&text);
});
