//! Built-in property suite run by `goodwin-sync check`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::analysis::{
    gain_report, iosp_inequality_check, max_derivative, max_secant_ratio, min_coupling_gain, static_block_check,
    threshold_lhs, ultimate_bounds,
};
use crate::error::Error;
use crate::graph::CouplingGraph;
use crate::kinetics::{IntervalBound, KineticFunction};
use crate::netsim::{
    simulate_block, simulate_driven, sync_metric, InitialCondition, Network, Protocol, SimConfig, Trajectory,
};
use crate::oscillator::{gonze_model, linear_goodwin, GonzeParams, LinearGoodwinParams};

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CheckOptions {
    /// Step size for the simulation-based properties (default 0.01 h).
    pub dt: Option<f64>,
}

impl CheckOptions {
    fn dt(&self) -> f64 {
        self.dt.unwrap_or(0.01)
    }
}

type Outcome = std::result::Result<(), String>;

pub struct Property {
    pub name: &'static str,
    pub description: &'static str,
    run: fn(&CheckOptions) -> Outcome,
}

impl Property {
    pub fn run(&self, opts: &CheckOptions) -> Outcome {
        (self.run)(opts)
    }
}

pub const PROPERTIES: &[Property] = &[
    Property {
        name: "positivity-gonze",
        description: "coupled circadian clocks keep every state positive",
        run: positivity_gonze,
    },
    Property {
        name: "positivity-fast-chain",
        description: "fast linear Goodwin chain keeps every state positive",
        run: positivity_fast_chain,
    },
    Property {
        name: "saturated-input-range",
        description: "saturated inputs stay strictly inside (0, M0)",
        run: saturated_input_range,
    },
    Property {
        name: "sync-manifold-invariance",
        description: "identical initial states remain identical",
        run: sync_manifold_invariance,
    },
    Property {
        name: "iosp-linear-block",
        description: "dissipation inequality on a linear/identity block",
        run: iosp_linear_block,
    },
    Property {
        name: "iosp-mm-block",
        description: "dissipation inequality on a Michaelis-Menten/linear block",
        run: iosp_mm_block,
    },
    Property {
        name: "static-feedback-gain",
        description: "Hill feedback is monotone with slope at most its secant gain",
        run: static_feedback_gain,
    },
    Property {
        name: "ultimate-bounds",
        description: "driven linear chain ends inside its ultimate bounds",
        run: ultimate_bounds_hold,
    },
    Property {
        name: "gonze-bounds-inapplicable",
        description: "bound recursion fails at block 1 for the circadian clock",
        run: gonze_bounds_inapplicable,
    },
    Property {
        name: "threshold-consistency",
        description: "returned coupling threshold is the first crossing",
        run: threshold_consistency,
    },
    Property {
        name: "complete-graph-spectrum",
        description: "complete graph on 10 nodes has lambda2 = 10 and |L| = 18",
        run: complete_graph_spectrum,
    },
];

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Outcome {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn all_positive(tr: &Trajectory) -> Outcome {
    for (t, s) in tr.times.iter().zip(&tr.states) {
        if let Some((j, i, v)) = s.min_entry() {
            if v <= 0.0 {
                return Err(format!("oscillator {j} state {i} = {v} at t={t}"));
            }
        }
    }
    Ok(())
}

fn gonze_run(opts: &CheckOptions) -> std::result::Result<(Trajectory, f64), String> {
    let model = gonze_model(&GonzeParams::default()).map_err(err)?;
    let net = Network::new(
        model,
        CouplingGraph::complete(4, 1.0).map_err(err)?,
        Protocol::saturated(10.0, 0.0005, 0.9).map_err(err)?,
    )
    .map_err(err)?;
    let cfg = SimConfig {
        t_end: 200.0,
        dt: opts.dt(),
        record_stride: 1,
        seed: 7,
        initial: InitialCondition::uniform(3, 0.5, 1.5),
        ..Default::default()
    };
    Ok((net.simulate(&cfg).map_err(err)?, 0.0005))
}

fn positivity_gonze(opts: &CheckOptions) -> Outcome {
    all_positive(&gonze_run(opts)?.0)
}

fn positivity_fast_chain(opts: &CheckOptions) -> Outcome {
    let model = linear_goodwin(&LinearGoodwinParams {
        degradation: 5.0,
        ..Default::default()
    })
    .map_err(err)?;
    let net = Network::new(
        model,
        CouplingGraph::complete(3, 1.0).map_err(err)?,
        Protocol::saturated(1.0, 1.0, 0.9).map_err(err)?,
    )
    .map_err(err)?;
    let cfg = SimConfig {
        t_end: 50.0,
        dt: opts.dt(),
        record_stride: 1,
        seed: 3,
        initial: InitialCondition::uniform(3, 0.5, 1.5),
        ..Default::default()
    };
    all_positive(&net.simulate(&cfg).map_err(err)?)
}

fn saturated_input_range(opts: &CheckOptions) -> Outcome {
    let (tr, m0) = gonze_run(opts)?;
    let bad = tr.inputs.iter().flatten().find(|u| !(**u > 0.0 && **u < m0));
    ensure(bad.is_none(), || format!("input {} outside (0, {m0})", bad.unwrap()))
}

fn sync_manifold_invariance(opts: &CheckOptions) -> Outcome {
    let model = gonze_model(&GonzeParams::default()).map_err(err)?;
    let net = Network::new(
        model,
        CouplingGraph::ring(5, 1.0).map_err(err)?,
        Protocol::saturated(50.0, 0.0005, 0.9).map_err(err)?,
    )
    .map_err(err)?;
    let cfg = SimConfig {
        t_end: 100.0,
        dt: opts.dt(),
        initial: InitialCondition::Explicit(vec![vec![0.9, 1.2, 0.7]; 5]),
        ..Default::default()
    };
    let s = sync_metric(&net.simulate(&cfg).map_err(err)?, None).map_err(err)?;
    let worst = s.max_disagreement.iter().copied().fold(0.0, f64::max);
    ensure(worst <= 1e-12, || format!("disagreement reached {worst}"))
}

/// Two trajectories of one block under different seeded sinusoidal inputs.
fn iosp_block(f: KineticFunction, g: KineticFunction) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut wave = || {
        let (mean, amp) = (rng.gen_range(0.05..0.15), rng.gen_range(0.0..0.05));
        let (w, phase) = (rng.gen_range(0.1..1.0), rng.gen_range(0.0..6.3));
        move |t: f64| mean + amp * (w * t + phase).sin()
    };
    let (ua, ub) = (wave(), wave());
    let a = simulate_block(&f, &g, &ua, 0.2, 0.001, 100.0).map_err(err)?;
    let b = simulate_block(&f, &g, &ub, 1.5, 0.001, 100.0).map_err(err)?;
    let hi = a.x.iter().chain(&b.x).copied().fold(0.0, f64::max);
    let interval = IntervalBound::upto(hi).map_err(err)?;
    let k = 1.0 / max_secant_ratio(&f, &g, interval);
    let v = iosp_inequality_check(&g, &a, &b, k, interval).map_err(err)?;
    ensure(v <= 1e-4, || format!("violation {v}"))
}

fn iosp_linear_block(_: &CheckOptions) -> Outcome {
    iosp_block(KineticFunction::linear(1.0).map_err(err)?, KineticFunction::Identity)
}

fn iosp_mm_block(_: &CheckOptions) -> Outcome {
    iosp_block(
        KineticFunction::michaelis_menten(0.35, 1.0).map_err(err)?,
        KineticFunction::linear(0.7).map_err(err)?,
    )
}

fn static_feedback_gain(_: &CheckOptions) -> Outcome {
    let hill = KineticFunction::hill_inhibition(0.7, 1.0, 4.0).map_err(err)?;
    let iv = IntervalBound::upto(2.0).map_err(err)?;
    let gamma = max_derivative(&hill, iv);
    ensure(static_block_check(&hill, iv, gamma), || {
        format!("slope exceeds {gamma}")
    })?;
    ensure(!static_block_check(&hill, iv, 0.5 * gamma), || {
        "half the gain should be violated".into()
    })
}

fn ultimate_bounds_hold(opts: &CheckOptions) -> Outcome {
    let model = linear_goodwin(&LinearGoodwinParams::default()).map_err(err)?;
    let m0 = 1.0;
    let bars = ultimate_bounds(&model, m0).map_err(err)?;
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let levels: Vec<f64> = (0..200).map(|_| rng.gen_range(0.0..=m0)).collect();
    let input = |t: f64| levels[((t / 2.0) as usize).min(199)];
    let cfg = SimConfig {
        t_end: 400.0,
        dt: opts.dt(),
        record_stride: 1,
        initial: InitialCondition::Explicit(vec![vec![3.0, 0.1, 2.5]]),
        ..Default::default()
    };
    let tr = simulate_driven(&model, &input, &[3.0, 0.1, 2.5], &cfg).map_err(err)?;
    for (t, s) in tr.times.iter().zip(&tr.states) {
        if *t < 360.0 {
            continue;
        }
        for (i, (x, bar)) in s.as_slice().iter().zip(&bars).enumerate() {
            if *x > bar * 1.01 {
                return Err(format!("x{} = {x} exceeds bound {bar} at t={t}", i + 1));
            }
        }
    }
    Ok(())
}

fn gonze_bounds_inapplicable(_: &CheckOptions) -> Outcome {
    let model = gonze_model(&GonzeParams::default()).map_err(err)?;
    match ultimate_bounds(&model, 0.0005) {
        Err(Error::BoundUndefined { block: 1, .. }) => Ok(()),
        other => Err(format!("expected failure at block 1, got {other:?}")),
    }
}

fn threshold_consistency(_: &CheckOptions) -> Outcome {
    let model = linear_goodwin(&LinearGoodwinParams::default()).map_err(err)?;
    let g0 = KineticFunction::saturating_coupling(1.0, 0.9).map_err(err)?;
    let graph = CouplingGraph::complete(10, 1.0).map_err(err)?;
    let gains = gain_report(&model, 1.0, None).map_err(err)?;
    let (l2, ln) = (graph.lambda2().map_err(err)?, graph.laplacian_max_norm());
    let t = min_coupling_gain(gains.k_eps, l2, ln, gains.y_star, &g0).map_err(err)?;
    let lhs = |c: f64| threshold_lhs(c, l2, ln, gains.y_star, &g0);
    ensure(
        t.c_min > 0.0 && lhs(t.c_min * (1.0 + 1e-9)) > gains.k_eps && lhs(t.c_min * (1.0 - 1e-6)) <= gains.k_eps,
        || format!("c_min = {} is not the first crossing", t.c_min),
    )
}

fn complete_graph_spectrum(_: &CheckOptions) -> Outcome {
    let g = CouplingGraph::complete(10, 1.0).map_err(err)?;
    let l2 = g.lambda2().map_err(err)?;
    ensure((l2 - 10.0).abs() < 1e-10 && g.laplacian_max_norm() == 18.0, || {
        format!("lambda2 = {l2}, |L| = {}", g.laplacian_max_norm())
    })
}
