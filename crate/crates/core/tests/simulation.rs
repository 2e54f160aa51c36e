use goodwin_sync::graph::CouplingGraph;
use goodwin_sync::kinetics::KineticFunction;
use goodwin_sync::netsim::{
    period_estimate, simulate_driven, sync_metric, InitialCondition, Method, Network, NetworkState, Protocol, SimConfig,
};
use goodwin_sync::oscillator::{gonze_model, CfsModel, GonzeParams};

const M0: f64 = 0.0005;

fn gonze() -> CfsModel {
    gonze_model(&GonzeParams::default()).unwrap()
}

fn figure_network(n: usize, c: f64) -> Network {
    Network::new(
        gonze(),
        CouplingGraph::complete(n, 1.0).unwrap(),
        Protocol::saturated(c, M0, 0.9).unwrap(),
    )
    .unwrap()
}

#[test]
fn uncoupled_clock_period_near_a_day() {
    let cfg = SimConfig {
        t_end: 500.0,
        record_stride: 1,
        initial: InitialCondition::Explicit(vec![vec![0.1, 0.25, 2.5]]),
        ..Default::default()
    };
    let tr = simulate_driven(&gonze(), &|_| 0.0, &[0.1, 0.25, 2.5], &cfg).unwrap();
    let p = period_estimate(&tr, 0, 0, 100.0).unwrap();
    assert!((p - 23.5).abs() <= 1.0, "period {p}");
}

#[test]
fn permutation_relabels_trajectory() {
    // a weighted balanced digraph so the relabeling is not a symmetry
    let rows = vec![
        vec![0.0, 2.0, 0.0, 1.0],
        vec![1.0, 0.0, 2.0, 0.0],
        vec![0.0, 1.0, 0.0, 2.0],
        vec![2.0, 0.0, 1.0, 0.0],
    ];
    let graph = CouplingGraph::from_rows(&rows).unwrap();
    let perm = [2usize, 0, 3, 1];
    let protocol = Protocol::saturated(20.0, M0, 0.9).unwrap();
    let init: Vec<Vec<f64>> = (0..4)
        .map(|j| vec![0.5 + 0.2 * j as f64, 1.0, 1.4 - 0.1 * j as f64])
        .collect();
    let cfg = SimConfig {
        t_end: 100.0,
        initial: InitialCondition::Explicit(init.clone()),
        ..Default::default()
    };
    let a = Network::new(gonze(), graph.clone(), protocol)
        .unwrap()
        .simulate(&cfg)
        .unwrap();

    // node i of the relabeled graph is node perm[i] of the original
    let init_p: Vec<Vec<f64>> = perm.iter().map(|&p| init[p].clone()).collect();
    let b = Network::new(gonze(), graph.permuted(&perm).unwrap(), protocol)
        .unwrap()
        .simulate(&SimConfig {
            initial: InitialCondition::Explicit(init_p),
            ..cfg.clone()
        })
        .unwrap();
    for (sa, sb) in a.states.iter().zip(&b.states) {
        for (i, &p) in perm.iter().enumerate() {
            assert_eq!(sb.oscillator(i), sa.oscillator(p));
        }
    }
}

#[test]
fn synchronized_manifold_is_invariant() {
    let net = figure_network(10, 100.0);
    let cfg = SimConfig {
        t_end: 300.0,
        initial: InitialCondition::Explicit(vec![vec![0.7, 1.3, 0.9]; 10]),
        ..Default::default()
    };
    let tr = net.simulate(&cfg).unwrap();
    let s = sync_metric(&tr, None).unwrap();
    assert!(s.max_disagreement.iter().all(|e| *e <= 1e-12));
    assert!(tr.inputs.iter().flatten().all(|u| *u == 0.5 * M0));
}

#[test]
fn saturated_inputs_stay_inside_open_range() {
    let tr = figure_network(6, 10.0)
        .simulate(&SimConfig {
            t_end: 200.0,
            seed: 9,
            ..Default::default()
        })
        .unwrap();
    assert!(tr.inputs.iter().flatten().all(|u| *u > 0.0 && *u < M0));
    assert!(tr.states.iter().all(|s| s.as_slice().iter().all(|x| *x > 0.0)));
}

#[test]
fn strong_coupling_synchronizes_on_a_long_horizon() {
    let cfg = SimConfig {
        t_end: 1500.0,
        ..Default::default()
    };
    let tr = figure_network(10, 100.0).simulate(&cfg).unwrap();
    let s = sync_metric(&tr, None).unwrap();
    let e_end = s.last().unwrap();
    assert!(e_end < 1e-3, "e(1500) = {e_end}");
    let tail = tr.times.iter().zip(&tr.inputs).filter(|(t, _)| **t >= 1450.0);
    for (_, u) in tail {
        assert!(u.iter().all(|v| (v - 0.5 * M0).abs() <= 1e-6));
    }
    // windowed means of e shrink across the run
    let means = s.window_means(100.0, 200.0);
    assert!(means.windows(2).all(|w| w[1] <= w[0]), "{means:?}");
}

#[test]
fn coupling_gain_orders_final_disagreement() {
    let cfg = SimConfig {
        t_end: 600.0,
        ..Default::default()
    };
    let e: Vec<f64> = [0.0, 1.0, 10.0, 100.0]
        .iter()
        .map(|&c| {
            sync_metric(&figure_network(10, c).simulate(&cfg).unwrap(), None)
                .unwrap()
                .last()
                .unwrap()
        })
        .collect();
    assert!(e[0] > 0.05);
    assert!(e.windows(2).all(|w| w[1] <= w[0]), "{e:?}");
}

#[test]
fn single_node_saturated_equals_constant_half_input() {
    let cfg = SimConfig {
        t_end: 100.0,
        initial: InitialCondition::Explicit(vec![vec![1.0, 1.0, 1.0]]),
        ..Default::default()
    };
    let net = figure_network(1, 100.0);
    let coupled = net.simulate(&cfg).unwrap();
    let driven = simulate_driven(&gonze(), &|_| 0.5 * M0, &[1.0, 1.0, 1.0], &cfg).unwrap();
    assert_eq!(coupled.states, driven.states);
}

#[test]
fn adaptive_and_fixed_step_agree() {
    let net = figure_network(4, 10.0);
    let base = SimConfig {
        t_end: 100.0,
        seed: 4,
        ..Default::default()
    };
    let a = net.simulate(&base).unwrap();
    let b = net
        .simulate(&SimConfig {
            method: Method::Rkf45 {
                rel_tol: 1e-10,
                abs_tol: 1e-12,
            },
            dt: 0.1,
            record_stride: 1,
            ..base.clone()
        })
        .unwrap();
    let (xa, xb) = (a.last_state().unwrap(), b.last_state().unwrap());
    for (p, q) in xa.as_slice().iter().zip(xb.as_slice()) {
        assert!((p - q).abs() < 1e-6);
    }
    assert_eq!(a.times.last(), b.times.last());
}

#[test]
fn csv_output_is_deterministic() {
    let net = figure_network(3, 1.0);
    let cfg = SimConfig {
        t_end: 30.0,
        seed: 5,
        ..Default::default()
    };
    let render = || {
        let mut buf = Vec::new();
        net.simulate(&cfg).unwrap().write_csv(&mut buf).unwrap();
        buf
    };
    assert_eq!(render(), render());
}

#[test]
fn step_matches_hand_rolled_rk4_for_a_network() {
    let net = figure_network(2, 50.0);
    let g0 = KineticFunction::saturating_coupling(M0, 0.9).unwrap();
    let x0 = [[1.0, 0.8, 1.2], [0.6, 1.1, 0.9]];
    let rhs = |x: &[[f64; 3]; 2]| {
        let y = [0.7 * x[0][0], 0.7 * x[1][0]];
        let u = [g0.value(50.0 * (y[1] - y[0])), g0.value(50.0 * (y[0] - y[1]))];
        let mut d = [[0.0; 3]; 2];
        for j in 0..2 {
            let s = x[j];
            d[j] = [
                0.7 / (1.0 + s[2].powi(4)) - 0.35 * s[0] / (1.0 + s[0]) + u[j],
                0.7 * s[0] - 0.35 * s[1] / (1.0 + s[1]),
                0.7 * s[1] - 0.35 * s[2] / (1.0 + s[2]),
            ];
        }
        d
    };
    let h = 0.01;
    let add = |x: &[[f64; 3]; 2], k: &[[f64; 3]; 2], c: f64| {
        let mut o = *x;
        for j in 0..2 {
            for i in 0..3 {
                o[j][i] += c * k[j][i];
            }
        }
        o
    };
    let k1 = rhs(&x0);
    let k2 = rhs(&add(&x0, &k1, h / 2.0));
    let k3 = rhs(&add(&x0, &k2, h / 2.0));
    let k4 = rhs(&add(&x0, &k3, h));
    let state = NetworkState::new(&[x0[0].to_vec(), x0[1].to_vec()]).unwrap();
    let next = net.step(&state, h).unwrap();
    for j in 0..2 {
        for i in 0..3 {
            let want = x0[j][i] + h / 6.0 * (k1[j][i] + 2.0 * k2[j][i] + 2.0 * k3[j][i] + k4[j][i]);
            assert!((next.oscillator(j)[i] - want).abs() <= 1e-12);
        }
    }
}
