#![no_main]

use ctxmine::annotation::parse_document;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &str| {
    if let Ok(doc) = parse_document(data) {
        // Anything accepted must survive a write/read cycle unchanged.
        let again = parse_document(&doc.to_json_line()).expect("serialized document parses");
        assert_eq!(doc, again);
        for link in doc.links() {
            assert!(doc.aligned_targets(link.source()).unwrap().contains(&link.target()));
            assert!(doc.aligned_sources(link.target()).unwrap().contains(&link.source()));
        }
    }
});
