#![no_main]

use ctxmine::score::read_hypotheses;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let _ = read_hypotheses(data);
});
