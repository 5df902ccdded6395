#![no_main]

use geoslice::StepBudget;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(m) = text.parse::<StepBudget>() {
        assert_eq!(m.to_string().parse::<StepBudget>().expect("printed budget parses"), m);
    }
});
