#![no_main]

use libfuzzer_sys::fuzz_target;
use trex_core::dataset::{load_csv, LoadOptions};

fuzz_target!(|data: &[u8]| {
    // Must never panic or hang; parse errors are fine.
    let _ = load_csv(data, &LoadOptions::default());
    let _ = load_csv(
        data,
        &LoadOptions {
            label_column: Some("label".into()),
        },
    );
});
