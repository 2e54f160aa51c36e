//! The synchronization certificate: ultimate bounds, secant gains, the
//! iOFP gain and the smallest coupling gain that satisfies the strength
//! inequality. Also shows where the chain of bounds breaks for the
//! circadian clock.
//!
//! cargo run --example certificate

use goodwin_sync::analysis::{analyze, threshold_lhs};
use goodwin_sync::graph::CouplingGraph;
use goodwin_sync::kinetics::KineticFunction;
use goodwin_sync::oscillator::{gonze_model, linear_goodwin, GonzeParams, LinearGoodwinParams};
use goodwin_sync::scenario::analysis_text;

fn main() -> goodwin_sync::Result<()> {
    let graph = CouplingGraph::complete(10, 1.0)?;

    let chain = linear_goodwin(&LinearGoodwinParams::default())?;
    let g0 = KineticFunction::saturating_coupling(1.0, 0.9)?;
    let rep = analyze(&chain, &graph, Some(&g0), Some(0.01), None, false);
    println!("== linear Goodwin chain, M0 = 1 ==");
    print!("{}", analysis_text(&rep, Some(&g0)));

    // the left side of the inequality rises, peaks and decays, so the
    // certified gains form a bounded window
    let gains = rep.gains.as_ref().expect("bounds exist for this chain");
    let k = rep.k().unwrap();
    println!("\n   c        lhs(c)      certified");
    for c in [1e-4, 1e-3, 2.6e-3, 1e-2, 0.03, 0.1, 1.0] {
        let lhs = threshold_lhs(c, 10.0, 18.0, gains.y_star, &g0);
        println!("{c:>8} {lhs:>12.4e}  {}", lhs > k);
    }

    let clock = gonze_model(&GonzeParams::default())?;
    let g0 = KineticFunction::saturating_coupling(0.0005, 0.9)?;
    println!("\n== circadian clock, M0 = 0.0005 ==");
    print!(
        "{}",
        analysis_text(&analyze(&clock, &graph, Some(&g0), Some(100.0), None, false), Some(&g0))
    );
    Ok(())
}
