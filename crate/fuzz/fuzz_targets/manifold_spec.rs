#![no_main]

use geoslice::Geometry;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    // Anything that parses must print back to a spec naming the same geometry.
    if let Ok(g) = text.parse::<Geometry>() {
        let again: Geometry = g.to_string().parse().expect("printed spec parses");
        assert_eq!(again, g);
    }
});
