#![no_main]

use fsltr_core::data::{cost_of_selection, parse_cost_csv};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Some((&d, rest)) = data.split_first() else {
        return;
    };
    let Ok(text) = std::str::from_utf8(rest) else {
        return;
    };
    let d = usize::from(d % 64);
    if let Ok((table, missing)) = parse_cost_csv(text, d) {
        assert_eq!(table.len(), d);
        assert!(missing.iter().all(|&j| j < d));
        assert!(table.costs().iter().all(|c| c.is_finite() && *c >= 0.0));
        let total = cost_of_selection(&vec![true; d], &table).unwrap();
        assert!(total >= 0.0);
    }
});
