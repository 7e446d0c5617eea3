//! Regenerates the synthetic fixtures: `cargo run -p siting-core --example make_fixtures -- fixtures`
//!
//! The site table is random but seeded, so reruns are byte-identical.

use std::path::PathBuf;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use siting_core::registry::ValueKind;
use siting_core::{LinguisticScale, Registry};

const SEED: u64 = 20_240_611;
const SITES: usize = 220;

// Contiguous states with coal generation history.
const STATES: [&str; 30] = [
    "AL", "AZ", "AR", "CO", "FL", "GA", "IL", "IN", "IA", "KS", "KY", "LA", "MD", "MI", "MN", "MS",
    "MO", "MT", "NE", "NM", "ND", "OH", "OK", "PA", "SC", "TN", "TX", "UT", "VA", "WV",
];

fn numeric(rng: &mut ChaCha8Rng, code: &str) -> f64 {
    let x: f64 = match code {
        "SP3" => rng.random_range(6.0..18.0),          // retail price, cents/kWh
        "FP1" => rng.random_range(-40.0..60.0),        // net imports, TWh
        "FP2" => rng.random_range(0.0..250.0),         // hydrogen demand, kt/yr
        "RHM4" => rng.random_range(0.0..1.0),          // landslide susceptibility
        "RHM7" => rng.random_range(0.02..0.6),         // peak ground acceleration, g
        "RHM8" => rng.random_range(0.0..15.0),         // slope, degrees
        "CSF1" => rng.random_range(50.0..4000.0),      // persons per sq mi
        "CSF2" => rng.random_range(0.0..1.0),          // transport access index
        "CSF3" => rng.random_range(0.0..1.0),          // proximity to operating plants
        "CSF4" => rng.random_range(0.0..1.0),          // proximity to R&D centers
        "CSF5" => rng.random_range(0.0..1.0),          // substation capacity index
        other => panic!("no generator for {other}"),
    };
    // Multiples of 2^-10 are exact in binary, so affine rescalings of a
    // column (3x + 7 and the like) introduce no rounding.
    (x * 1024.0).round() / 1024.0
}

fn main() {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "fixtures".into()));
    std::fs::create_dir_all(&dir).expect("create fixture dir");
    let registry = Registry::standard();
    std::fs::write(dir.join("registry.json"), registry.to_json_string()).expect("write registry");
    std::fs::write(dir.join("scale.json"), LinguisticScale::default_scale().to_json_string())
        .expect("write scale");

    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut out = csv::Writer::from_path(dir.join("sites.csv")).expect("open sites.csv");
    let mut header = vec!["site_id".to_string(), "name".into(), "state".into(), "lat".into(), "lon".into()];
    header.extend(registry.codes().map(str::to_string));
    out.write_record(&header).unwrap();
    for i in 1..=SITES {
        let state = STATES[rng.random_range(0..STATES.len())];
        let lat: f64 = rng.random_range(26.0..48.5);
        let lon: f64 = rng.random_range(-114.0..-76.0);
        let mut row = vec![
            format!("S{i:03}"),
            format!("Synthetic Station {i:03}"),
            state.to_string(),
            format!("{lat:.4}"),
            format!("{lon:.4}"),
        ];
        for spec in registry.criteria() {
            row.push(match spec.kind {
                ValueKind::Binary => rng.random_bool(0.45).to_string(),
                ValueKind::Numeric => numeric(&mut rng, &spec.code).to_string(),
            });
        }
        out.write_record(&row).unwrap();
    }
    out.flush().unwrap();
}
