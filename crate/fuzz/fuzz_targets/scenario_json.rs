#![no_main]

use libfuzzer_sys::fuzz_target;

// Parse + validate a scenario document and materialize its model; never run
// the experiment (runtime is unbounded by construction).
fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(scenario) = hdcov::montecarlo::Scenario::from_json_str(text) {
            let _ = hdcov::model::CoefficientModel::new(scenario.model);
        }
    }
});
