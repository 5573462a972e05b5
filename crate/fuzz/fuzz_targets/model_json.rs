#![no_main]

use libfuzzer_sys::fuzz_target;

// Model documents come from untrusted files; parsing must never panic and
// never allocate beyond the coefficient cell cap.
fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        let _ = hdcov::model::CoefficientModel::from_json_str(text);
    }
});
