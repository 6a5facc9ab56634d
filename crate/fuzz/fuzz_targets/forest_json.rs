#![no_main]

use libfuzzer_sys::fuzz_target;
use trex_core::tree::{forest_from_json, forest_to_json};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(forest) = forest_from_json(text) {
        // Anything accepted must be a valid model: exercising the views
        // and a re-export must not panic.
        let json = forest_to_json(&forest);
        let again = forest_from_json(&json).expect("round trip");
        assert_eq!(again, forest);
        for t in &forest.trees {
            let _ = t.node_count();
            let _ = t.depth();
            let _ = t.paths();
        }
    }
});
