#![no_main]

use geoslice::IntervalSet;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(s) = text.parse::<IntervalSet>() {
        let again: IntervalSet = s.to_string().parse().expect("printed set parses");
        assert_eq!(again, s);
        for pair in s.intervals().windows(2) {
            assert!(pair[0].1 < pair[1].0, "intervals sorted and disjoint");
        }
    }
});
