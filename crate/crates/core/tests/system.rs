mod common;

use common::{load, system_path};
use tilefab::system::*;

#[test]
fn transfer_entries_decrease_in_t() {
    for name in ["fibonacci", "two_vertex", "mixed_scales", "golden_b", "new12"] {
        let sys = load(name);
        let mut prev = transfer_matrix(&sys, 0.0);
        for i in 1..=20 {
            let m = transfer_matrix(&sys, i as f64 * 0.1);
            for (a, b) in m.iter().zip(prev.iter()) {
                assert!(*b == 0.0 && *a == 0.0 || a < b, "{name}");
            }
            prev = m;
        }
    }
}

#[test]
fn loading_is_deterministic() {
    let text = std::fs::read_to_string(system_path("new12")).unwrap();
    let a = load_system(&text).unwrap();
    let b = load_system(&text).unwrap();
    assert_eq!(a.hash(), b.hash());
    assert_eq!(a.s().to_bits(), b.s().to_bits());
    for (x, y) in a.edges().iter().zip(b.edges()) {
        assert_eq!(x.map.matrix(), y.map.matrix());
        assert_eq!(x.map.translate(), y.map.translate());
    }
}

#[test]
fn validation_reports() {
    let sys = load("fibonacci");
    let r = validate(&sys, None);
    for name in ["gcd", "strongly-connected", "primitive"] {
        assert_eq!(r.get(name).unwrap().status, CheckStatus::Pass, "{name}");
    }
    let text = std::fs::read_to_string(system_path("fibonacci")).unwrap();
    let mut cfg: serde_json::Value = serde_json::from_str(&text).unwrap();
    cfg["edges"][0]["a"] = 2.into();
    cfg["edges"][1]["a"] = 4.into();
    cfg["s"] = serde_json::json!(0.7);
    let err = load_system(&cfg.to_string()).unwrap_err();
    assert!(err.to_string().contains("gcd(a)≠1"), "{err}");
}

#[test]
fn parse_errors_carry_location() {
    match load_system("{\"dimension\": 1,\n \"s\": }") {
        Err(SystemError::Parse { line, .. }) => assert_eq!(line, 2),
        other => panic!("{other:?}"),
    }
}

#[test]
fn every_shipped_system_loads_or_is_explained() {
    for name in ["binary", "fibonacci", "two_vertex", "mixed_scales", "sierpinski", "golden_b", "new12", "example02", "tetrahedron"] {
        load(name);
    }
}
