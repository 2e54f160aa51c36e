//! The scalar maps that make up a Goodwin chain: evaluation, derivatives,
//! inverses, ranges, and the slope of the saturating coupling map.
//!
//! cargo run --example kinetics

use goodwin_sync::analysis::phi;
use goodwin_sync::kinetics::KineticFunction;

fn main() -> goodwin_sync::Result<()> {
    let mm = KineticFunction::michaelis_menten(0.35, 1.0)?;
    let hill = KineticFunction::hill_inhibition(0.7, 1.0, 4.0)?;
    let sat = KineticFunction::saturating_coupling(0.0005, 0.9)?;

    println!("Michaelis-Menten 0.35*x/(1+x)");
    for x in [0.0, 0.5, 1.0, 4.0] {
        println!("  f({x}) = {:.6}   f'({x}) = {:.6}", mm.eval(x)?, mm.derivative(x)?);
    }
    println!("  f^-1(0.2) = {:.6}", mm.inverse(0.2)?);
    println!(
        "  sup f = {} (so f^-1(0.7005) is {:?})",
        mm.sup_value(),
        mm.inverse(0.7005).err().map(|e| e.to_string())
    );
    println!("  phi(2) = int_1^2 ds/f(s) = {:.7}", phi(&mm, 2.0)?);

    println!("Hill repression -0.7/(1+y^4), a nonpositive output");
    for y in [0.0, 0.5, 1.0, 2.0] {
        println!(
            "  g({y}) = {:+.6}   g'({y}) = {:.6}",
            hill.eval(y)?,
            hill.derivative(y)?
        );
    }

    println!("Saturating coupling with M0 = 0.0005, rho = 0.9");
    for v in [-10.0, -1.0, 0.0, 1.0, 10.0] {
        println!("  g0({v:>5}) = {:.8}", sat.eval(v)?);
    }
    // nu(s) is the smallest slope on [-s, s]; s*nu(s) peaks at s = 1
    for s in [0.01, 0.1, 1.0, 10.0, 100.0] {
        let nu = sat.derivative_inf_on_symmetric_interval(s)?;
        println!("  s = {s:>6}: nu(s) = {nu:.4e}, s*nu(s) = {:.4e}", s * nu);
    }
    Ok(())
}
