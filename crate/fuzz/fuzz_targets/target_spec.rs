#![no_main]

use geoslice::Target;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(t) = text.parse::<Target>() {
        let again: Target = t.spec().parse().expect("canonical spec parses");
        assert_eq!(again.spec(), t.spec());
        // The start point of a valid target lies in its support.
        if let Ok(x) = t.default_start() {
            assert!(t.density(&x) > 0.0);
        }
    }
});
