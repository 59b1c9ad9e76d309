#![no_main]

use fsltr_core::data::{parse_svmlight, write_svmlight, ParseOptions};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(parsed) = parse_svmlight(text, ParseOptions::default()) else {
        return;
    };
    let options = ParseOptions {
        num_features: Some(parsed.num_features),
        ..ParseOptions::default()
    };
    let again = parse_svmlight(&write_svmlight(&parsed), options).expect("written text parses");
    assert_eq!(again, parsed);
});
