//! CSV result tables are read back by downstream tooling; the reader must
//! reject malformed input without panicking, and accepted input must
//! re-emit and re-parse to the same rows.

#![no_main]

use libfuzzer_sys::fuzz_target;

use qkinet_cli::table::ResultTable;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(table) = ResultTable::from_csv(text) {
        let again = ResultTable::from_csv(&table.to_csv()).expect("re-emitted CSV parses");
        assert_eq!(again.rows(), table.rows());
    }
});
