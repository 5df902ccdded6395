#![no_main]

use geoslice::kernel::read_chain_jsonl;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    // Must reject malformed chains with an error, never a panic.
    let _ = read_chain_jsonl(data);
});
