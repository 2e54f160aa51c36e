//! Runs a JSON scenario end to end: parse, build, simulate a small sweep
//! in parallel, write one CSV per gain and summary.txt.
//!
//! cargo run --release --example scenario_csv [out_dir]

use std::path::PathBuf;

use goodwin_sync::scenario::{parse_scenario, run_simulate, Scenario};

const CONFIG: &str = r#"{
  "preset": "gonze-fig",
  "graph": {"type": "ring", "N": 6, "weight": 2},
  "sim": {"t_end": 240, "record_stride": 100, "seed": 7},
  "sweep": {"c": [0, 50]}
}"#;

fn main() -> goodwin_sync::Result<()> {
    let out: PathBuf = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("goodwin-sync-example"));
    let scn = Scenario::build(parse_scenario(CONFIG, None)?)?;
    for r in run_simulate(&scn, &out)? {
        println!("{} (e at end {:.3e})", r.csv.display(), r.e_end.unwrap_or(f64::NAN));
    }
    let summary = std::fs::read_to_string(out.join("summary.txt"))?;
    print!("{summary}");
    let csv = std::fs::read_to_string(out.join("traj_c50.csv"))?;
    for line in csv.lines().take(3) {
        println!("{line}");
    }
    Ok(())
}
