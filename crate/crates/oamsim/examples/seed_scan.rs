//! Scans a range of search seeds and reports which discover the four-fold
//! cycle, how many trials each needs, and the simplified setups.
//!
//! Usage: seed_scan [from] [to] [trials]

use oamsim::search::{run_search, standard_toolbox, CycleTarget, SearchConfig};
use std::time::Instant;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let from: u64 = args.get(1).map(|s| s.parse().unwrap()).unwrap_or(0);
    let to: u64 = args.get(2).map(|s| s.parse().unwrap()).unwrap_or(20);
    let trials: u64 = args.get(3).map(|s| s.parse().unwrap()).unwrap_or(100_000);

    for seed in from..to {
        let mut config = SearchConfig::new(
            standard_toolbox(),
            CycleTarget {
                order: 4,
                input_path: "a".into(),
                output_path: "a".into(),
                ells: Some(vec![-2, -1, 0, 1]),
            },
            trials,
            seed,
        );
        config.l_min = -6;
        config.l_max = 6;
        let start = Instant::now();
        let report = run_search(&config).unwrap();
        println!(
            "seed {seed}: found={} trials_used={} elapsed={:.2?}{}",
            report.found,
            report.trials_used,
            start.elapsed(),
            report
                .setup
                .map(|s| format!("\n{}", s.trim_end().replace('\n', " | ")))
                .unwrap_or_default()
        );
    }
}
