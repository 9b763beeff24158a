#![no_main]

use ctxmine::extract::read_examples;
use ctxmine::score::{Hypothesis, score};
use ctxmine::split::{SplitConfig, split};
use ctxmine::text::Segmentation;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(examples) = read_examples(data) else { return };
    let assignments = split(&examples, &SplitConfig::default());
    assert_eq!(assignments.len(), examples.len());
    let hyps: Vec<Hypothesis> = examples
        .iter()
        .map(|e| Hypothesis { example_id: e.example_id.clone(), text: e.tgt_sentence.clone() })
        .collect();
    if let Ok(report) = score(&examples, &hyps, Segmentation::Rules) {
        assert!(report.overall.correct <= report.overall.total);
    }
});
