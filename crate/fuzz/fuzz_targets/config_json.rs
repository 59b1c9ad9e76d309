#![no_main]

use fsltr_core::harness::ExperimentConfig;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(config) = ExperimentConfig::from_json(text) else {
        return;
    };
    let _ = config.validate();
    let written = serde_json::to_string(&config).unwrap();
    let again = ExperimentConfig::from_json(&written).expect("written config parses");
    assert_eq!(again, config);
});
