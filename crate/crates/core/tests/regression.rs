mod common;

use cfmm::trade_function::{midpoint_gap, probe_convexity, SamplingBox, TradeFunction};
use common::{fixture_path, load_witness_fixture, PROBE_SEED};

fn qm() -> TradeFunction<f64> {
    TradeFunction::power_log(2.0, 6).unwrap()
}

#[test]
fn stored_midpoint_witnesses_still_violate() {
    let (convex, concave) = load_witness_fixture(&fixture_path()).unwrap();
    let (mid, avg) = midpoint_gap(&qm(), &convex.0, &convex.1).unwrap();
    assert!(mid > avg, "midpoint {mid} should lie above the chord {avg}");
    let (mid, avg) = midpoint_gap(&qm(), &concave.0, &concave.1).unwrap();
    assert!(mid < avg, "midpoint {mid} should lie below the chord {avg}");
}

#[test]
fn probe_reproduces_stored_witnesses() {
    let (convex, concave) = load_witness_fixture(&fixture_path()).unwrap();
    let probe = probe_convexity(&qm(), 10_000, PROBE_SEED, &SamplingBox::default());
    let w = probe.convexity_witness.unwrap();
    assert_eq!((w.a, w.b), convex);
    let w = probe.concavity_witness.unwrap();
    assert_eq!((w.a, w.b), concave);
}

/// Rewrites the witness fixture: `cargo test --test regression -- --ignored`.
#[test]
#[ignore]
fn write_midpoint_fixture() {
    let probe = probe_convexity(&qm(), 10_000, PROBE_SEED, &SamplingBox::default());
    let entry = |w: Option<cfmm::trade_function::MidpointWitness<f64>>| {
        let w = w.expect("probe found no witness");
        serde_json::json!({ "a": w.a, "b": w.b, "phi_mid": w.phi_mid, "phi_avg": w.phi_avg })
    };
    let doc = serde_json::json!({
        "trade_function": "power_log p=2, six equal weights",
        "seed": PROBE_SEED,
        "trials": 10_000,
        "convexity": entry(probe.convexity_witness),
        "concavity": entry(probe.concavity_witness),
    });
    std::fs::write(fixture_path(), serde_json::to_string_pretty(&doc).unwrap() + "\n").unwrap();
}
