#![no_main]

use libfuzzer_sys::fuzz_target;
use trex_core::logic::from_dimacs;
use trex_core::theory::DomainTheory;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let _ = from_dimacs(text);
    if let Ok((th, _)) = DomainTheory::from_dimacs(text) {
        // Re-export with no condition table and re-parse.
        let out = th.to_dimacs(&[]);
        let (again, _) = DomainTheory::from_dimacs(&out).expect("round trip");
        assert_eq!(again, th);
    }
});
