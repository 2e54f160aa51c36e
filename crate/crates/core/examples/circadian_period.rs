//! Free-running period of a single circadian clock, and how it shifts
//! under a constant input.
//!
//! cargo run --release --example circadian_period

use goodwin_sync::netsim::{period_estimate, simulate_driven, InitialCondition, SimConfig};
use goodwin_sync::oscillator::{gonze_model, GonzeParams};

fn main() -> goodwin_sync::Result<()> {
    let model = gonze_model(&GonzeParams::default())?;
    let x0 = [1.0, 1.0, 1.0];
    let cfg = SimConfig {
        t_end: 500.0,
        record_stride: 1,
        initial: InitialCondition::Explicit(vec![x0.to_vec()]),
        ..Default::default()
    };
    for u in [0.0, 0.00025, 0.0005, 0.005] {
        let tr = simulate_driven(&model, &|_| u, &x0, &cfg)?;
        let period = period_estimate(&tr, 0, 0, 100.0)?;
        let tail: Vec<f64> = tr.series(0, 0).into_iter().skip(40_000).collect();
        let (lo, hi) = tail
            .iter()
            .fold((f64::INFINITY, 0.0f64), |(a, b), &v| (a.min(v), b.max(v)));
        println!("u = {u:<8} period = {period:.3} h, mRNA range [{lo:.4}, {hi:.4}] nM");
    }
    Ok(())
}
