#![no_main]

use libfuzzer_sys::fuzz_target;
use trex_core::logic::{AttributeKind, Condition, Predicate};
use trex_core::rules::{rules_from_text, rules_to_text};

fn condition_table() -> Vec<Condition> {
    vec![
        Condition {
            attribute: "A".into(),
            kind: AttributeKind::Numerical,
            predicate: Predicate::GreaterThan(25.0),
        },
        Condition {
            attribute: "A".into(),
            kind: AttributeKind::Numerical,
            predicate: Predicate::GreaterThan(60.5),
        },
        Condition {
            attribute: "I".into(),
            kind: AttributeKind::Numerical,
            predicate: Predicate::GreaterThan(-3.25),
        },
        Condition {
            attribute: "S".into(),
            kind: AttributeKind::Categorical,
            predicate: Predicate::Equals("PP".into()),
        },
        Condition {
            attribute: "S".into(),
            kind: AttributeKind::Categorical,
            predicate: Predicate::Equals("".into()),
        },
    ]
}

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let conditions = condition_table();
    if let Ok(rules) = rules_from_text(text, &conditions) {
        let out = rules_to_text(&rules, &conditions);
        let again = rules_from_text(&out, &conditions).expect("round trip");
        assert_eq!(again, rules);
    }
});
