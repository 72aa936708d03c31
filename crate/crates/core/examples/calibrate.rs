//! Regenerates `data/connectivity_calibration.json`.
//!
//! cargo run --release -p mapsearch-core --example calibrate > crates/core/data/connectivity_calibration.json

use mapsearch::netgen::{calibrate_connectivity, CalibrationEntry};

const PILOTS: usize = 50;
const SEED: u64 = 0x5EED_CA1B;

fn main() {
    let table: Vec<CalibrationEntry> = (1..=20)
        .map(|c| {
            let entry = calibrate_connectivity(c, PILOTS, SEED);
            eprintln!("c = {c:2}: mean parents {:.4}, median width {}", entry.mean_parents, entry.median_width);
            entry
        })
        .collect();
    println!("{}", serde_json::to_string_pretty(&table).expect("serializable"));
}
