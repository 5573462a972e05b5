#![no_main]

use libfuzzer_sys::fuzz_target;

// The CSV reader takes raw bytes; ragged rows, non-numeric fields and
// non-finite values must all surface as errors.
fuzz_target!(|data: &[u8]| {
    let _ = hdcov::io::read_panel(data);
});
