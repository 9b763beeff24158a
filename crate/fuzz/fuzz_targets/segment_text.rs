#![no_main]

use ctxmine::text::{Segmentation, contains_whole_tokens, detokenize, final_sentence, split_sentences, word_tokens};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &str| {
    for mode in [Segmentation::Rules, Segmentation::Off, Segmentation::Lines] {
        let last = final_sentence(data, mode);
        let tokens = word_tokens(last);
        if let Some(first) = tokens.first() {
            assert!(contains_whole_tokens(&tokens, first, true));
        }
    }
    let _ = split_sentences(data);
    let _ = detokenize(data.split(' '));
});
