#![allow(dead_code)]

use std::path::{Path, PathBuf};

use cfmm::trade_function::TradeFunction;

pub const TRADE_FUNCTIONS: [&str; 3] = ["am", "gm", "qm"];
pub const PROBE_SEED: u64 = 55;

pub fn config_path(tf: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs").join(format!("six_asset_{tf}.json"))
}

pub fn fixture_path() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/qm_midpoint_witnesses.json")
}

pub fn six_asset_functions() -> Vec<(&'static str, TradeFunction<f64>)> {
    vec![
        ("am", TradeFunction::arithmetic(6).unwrap()),
        ("gm", TradeFunction::geometric(6).unwrap()),
        ("qm", TradeFunction::power_log(2.0, 6).unwrap()),
    ]
}

type Pair = (Vec<f64>, Vec<f64>);

fn pair(v: &serde_json::Value) -> Option<Pair> {
    let vec = |key: &str| -> Option<Vec<f64>> { v.get(key)?.as_array()?.iter().map(|x| x.as_f64()).collect() };
    Some((vec("a")?, vec("b")?))
}

/// Reads the `(convexity, concavity)` witness pairs for the six-asset power-log mean.
pub fn load_witness_fixture(path: &Path) -> Result<(Pair, Pair), String> {
    let text = std::fs::read_to_string(path).map_err(|e| e.to_string())?;
    let doc: serde_json::Value = serde_json::from_str(&text).map_err(|e| e.to_string())?;
    let convex = doc.get("convexity").and_then(pair).ok_or("missing convexity witness")?;
    let concave = doc.get("concavity").and_then(pair).ok_or("missing concavity witness")?;
    Ok((convex, concave))
}
