//! Laplacians, algebraic connectivity and the row-sum norm for a few
//! coupling topologies.
//!
//! cargo run --example graph_spectra

use goodwin_sync::graph::CouplingGraph;
use goodwin_sync::linalg::symmetric_eigenvalues;

fn main() -> goodwin_sync::Result<()> {
    let graphs = [
        ("complete, N=10", CouplingGraph::complete(10, 1.0)?),
        ("ring, N=4", CouplingGraph::ring(4, 1.0)?),
        ("ring, N=10", CouplingGraph::ring(10, 1.0)?),
        ("directed cycle, N=3", CouplingGraph::directed_cycle(3, 1.0)?),
        (
            "weighted, N=3",
            CouplingGraph::from_rows(&[vec![0.0, 2.0, 1.0], vec![2.0, 0.0, 0.5], vec![1.0, 0.5, 0.0]])?,
        ),
    ];
    for (name, g) in &graphs {
        let c = g.connectivity();
        let spectrum = symmetric_eigenvalues(&g.laplacian().symmetric_part());
        println!("{name}");
        println!("  balanced={} strongly_connected={}", c.balanced, c.strongly_connected);
        println!("  spectrum of (L+L^T)/2: {spectrum:.4?}");
        println!("  lambda2 = {:.6}, |L|inf = {}", g.lambda2()?, g.laplacian_max_norm());
    }

    // an unbalanced digraph has no usable lambda2
    let star = CouplingGraph::from_rows(&[vec![0.0, 1.0, 1.0], vec![0.0, 0.0, 0.0], vec![0.0, 0.0, 0.0]])?;
    println!("in-star: {}", star.lambda2().unwrap_err());
    Ok(())
}
