//! Ten coupled circadian clocks on a complete graph under the saturated
//! protocol, swept over the coupling gain. Prints the disagreement
//! e(t) = max |x_i^j - x_i^k| at a few checkpoints, one run per thread.
//!
//! cargo run --release --example sync_sweep [t_end]

use rayon::prelude::*;

use goodwin_sync::netsim::sync_metric;
use goodwin_sync::scenario::Scenario;

fn main() -> goodwin_sync::Result<()> {
    let mut scn = Scenario::from_preset("gonze-fig")?;
    if let Some(t) = std::env::args().nth(1) {
        scn.sim.t_end = t.parse().expect("t_end must be a number");
    }
    let t_end = scn.sim.t_end;
    let checkpoints: Vec<f64> = [0.0, 0.25, 0.5, 0.75, 1.0].iter().map(|f| f * t_end).collect();

    let rows: Vec<goodwin_sync::Result<(f64, Vec<f64>, f64)>> = scn
        .sweep
        .par_iter()
        .map(|&c| {
            let tr = scn.network(Some(c))?.simulate(&scn.sim)?;
            let s = sync_metric(&tr, None)?;
            let at = |t: f64| {
                let i = s.times.partition_point(|x| *x < t - 1e-9).min(s.times.len() - 1);
                s.max_disagreement[i]
            };
            let u_spread = tr
                .inputs
                .last()
                .map_or(0.0, |u| u.iter().fold(0.0f64, |m, v| m.max((v - 0.00025).abs())));
            Ok((c, checkpoints.iter().map(|t| at(*t)).collect(), u_spread))
        })
        .collect();

    print!("{:>6}", "c");
    for t in &checkpoints {
        print!("  e({t:>6.0} h)");
    }
    println!("  max|u-M0/2| at end");
    for row in rows {
        let (c, e, u) = row?;
        print!("{c:>6}");
        for v in e {
            print!("  {v:>11.3e}");
        }
        println!("  {u:.3e}");
    }
    Ok(())
}
