#![no_main]

use libfuzzer_sys::fuzz_target;

use qkinet_cli::table::ResultTable;

fuzz_target!(|data: &[u8]| {
    let text = String::from_utf8_lossy(data);
    let _ = ResultTable::from_json_str(&text);
});
