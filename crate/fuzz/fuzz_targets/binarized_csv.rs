#![no_main]

use libfuzzer_sys::fuzz_target;
use trex_core::dataset::BinarizedDataset;

fuzz_target!(|data: &[u8]| {
    if let Ok(d) = BinarizedDataset::from_csv(data) {
        // A successful parse must round-trip.
        let text = d.to_csv();
        let again = BinarizedDataset::from_csv(text.as_bytes()).expect("round trip");
        assert_eq!(again.rows, d.rows);
        assert_eq!(again.labels, d.labels);
    }
});
