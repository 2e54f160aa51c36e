//! Numerical probe of the incremental dissipation inequality for single
//! blocks: two trajectories under different inputs, quadratic storage
//! (eps/2)*dx^2, and the secant gain of the block on the visited box.
//!
//! cargo run --release --example passivity_check

use goodwin_sync::analysis::{iosp_inequality_check, max_secant_ratio, static_block_check};
use goodwin_sync::kinetics::{IntervalBound, KineticFunction};
use goodwin_sync::netsim::simulate_block;

fn probe(name: &str, f: KineticFunction, g: KineticFunction) -> goodwin_sync::Result<()> {
    let ua = |t: f64| 0.12 + 0.05 * (0.3 * t).sin();
    let ub = |t: f64| 0.08 + 0.04 * (0.9 * t + 1.0).cos();
    let a = simulate_block(&f, &g, &ua, 0.1, 0.001, 60.0)?;
    let b = simulate_block(&f, &g, &ub, 1.8, 0.001, 60.0)?;
    let hi = a.x.iter().chain(&b.x).copied().fold(0.0, f64::max);
    let iv = IntervalBound::upto(hi)?;
    let gamma = max_secant_ratio(&f, &g, iv);
    println!("{name}: box [0, {hi:.3}], secant gain {gamma:.4}");
    for k in [1.0 / gamma, 1.2 / gamma, 2.0 / gamma] {
        let v = iosp_inequality_check(&g, &a, &b, k, iv)?;
        println!(
            "  k = {k:.4}: worst residual {v:+.3e} ({})",
            if v <= 1e-4 { "holds" } else { "violated" }
        );
    }
    Ok(())
}

fn main() -> goodwin_sync::Result<()> {
    probe(
        "linear/identity",
        KineticFunction::linear(1.0)?,
        KineticFunction::Identity,
    )?;
    probe(
        "Michaelis-Menten/linear",
        KineticFunction::michaelis_menten(0.35, 1.0)?,
        KineticFunction::linear(0.7)?,
    )?;

    let hill = KineticFunction::hill_inhibition(0.7, 1.0, 4.0)?;
    let iv = IntervalBound::upto(2.0)?;
    for gamma in [1.0, 1.2, 0.6] {
        println!(
            "static Hill block with gain {gamma}: {}",
            static_block_check(&hill, iv, gamma)
        );
    }
    Ok(())
}
