#![no_main]

use ctxmine::rules::{parse_rule_pack, validate_pack};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &str| {
    if let Ok(pack) = parse_rule_pack(data) {
        let _ = validate_pack(&pack);
        let again = parse_rule_pack(&pack.to_json().to_string()).expect("serialized pack parses");
        assert_eq!(pack, again);
        if pack.pack_id.ends_with(".pronouns") {
            let _ = pack.reversed_for_animacy();
        }
    }
});
