//! Simulation of `N` identical oscillators coupled through their first
//! outputs, plus synchronization and period diagnostics.
//!
//! Integration is fixed-step RK4 by default, or RKF45 with adaptive substeps
//! inside each output step. Coupling inputs are recomputed at every stage.
//! States are never clamped: a component below `-1e-9` aborts the run, since
//! exact solutions from positive data stay positive.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::analysis::BlockTrajectory;
use crate::error::{Error, Result};
use crate::format::format_sig;
use crate::graph::CouplingGraph;
use crate::kinetics::KineticFunction;
use crate::linalg::Matrix;
use crate::oscillator::CfsModel;

const POSITIVITY_TOL: f64 = 1e-9;

/// Rule mapping first outputs `Y₁` to external inputs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Protocol {
    None,
    /// `U = −c·L·Y₁`
    Linear {
        c: f64,
    },
    /// `uʲ = g₀(c·vʲ)`, `v = −L·Y₁`
    Saturated {
        c: f64,
        g0: KineticFunction,
    },
}

impl Protocol {
    pub fn saturated(c: f64, m0: f64, rho: f64) -> Result<Self> {
        let p = Protocol::Saturated {
            c,
            g0: KineticFunction::saturating_coupling(m0, rho)?,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Protocol::None => Ok(()),
            Protocol::Linear { c } => {
                if *c >= 0.0 && c.is_finite() {
                    Ok(())
                } else {
                    Err(Error::Config(format!("protocol: c must be finite and >= 0, got {c}")))
                }
            }
            Protocol::Saturated { c, g0 } => {
                if !(*c >= 0.0 && c.is_finite()) {
                    return Err(Error::Config(format!("protocol: c must be finite and >= 0, got {c}")));
                }
                if !matches!(g0, KineticFunction::SaturatingCoupling { .. }) {
                    return Err(Error::Config(
                        "saturated protocol needs a saturating_coupling map".into(),
                    ));
                }
                g0.validate()
            }
        }
    }

    pub fn coupling_gain(&self) -> Option<f64> {
        match self {
            Protocol::None => None,
            Protocol::Linear { c } | Protocol::Saturated { c, .. } => Some(*c),
        }
    }

    /// Same rule with a different gain (`None` stays `None`).
    pub fn with_gain(&self, c: f64) -> Self {
        match *self {
            Protocol::None => Protocol::None,
            Protocol::Linear { .. } => Protocol::Linear { c },
            Protocol::Saturated { g0, .. } => Protocol::Saturated { c, g0 },
        }
    }

    pub fn saturation(&self) -> Option<&KineticFunction> {
        match self {
            Protocol::Saturated { g0, .. } => Some(g0),
            _ => None,
        }
    }
}

/// External inputs produced by `protocol` for outputs `y1`.
pub fn coupling_inputs(protocol: &Protocol, laplacian: &Matrix, y1: &[f64]) -> Vec<f64> {
    let mut u = vec![0.0; y1.len()];
    coupling_inputs_into(protocol, laplacian, y1, &mut u);
    u
}

fn coupling_inputs_into(protocol: &Protocol, laplacian: &Matrix, y1: &[f64], u: &mut [f64]) {
    match protocol {
        Protocol::None => u.iter_mut().for_each(|v| *v = 0.0),
        Protocol::Linear { c } => {
            disagreement_into(laplacian, y1, u);
            u.iter_mut().for_each(|v| *v *= c);
        }
        Protocol::Saturated { c, g0 } => {
            disagreement_into(laplacian, y1, u);
            u.iter_mut().for_each(|v| *v = g0.value(*v * c));
        }
    }
}

/// `v = −L·y` evaluated as `vʲ = Σₖ wⱼₖ(yᵏ − yʲ)`, which is exactly zero on
/// the synchronized manifold.
fn disagreement_into(laplacian: &Matrix, y: &[f64], v: &mut [f64]) {
    for (j, vj) in v.iter_mut().enumerate() {
        *vj = laplacian
            .row(j)
            .iter()
            .zip(y)
            .enumerate()
            .filter(|(k, _)| *k != j)
            .map(|(_, (l, yk))| -l * (yk - y[j]))
            .sum();
    }
}

/// Joint state of all oscillators, stored oscillator-major.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkState {
    dim: usize,
    x: Vec<f64>,
}

impl NetworkState {
    pub fn new(states: &[Vec<f64>]) -> Result<Self> {
        let dim = states.first().map(|s| s.len()).unwrap_or(0);
        if dim == 0 || states.iter().any(|s| s.len() != dim) {
            return Err(Error::Config(
                "initial states must be non-empty and of equal length".into(),
            ));
        }
        Ok(Self {
            dim,
            x: states.iter().flatten().copied().collect(),
        })
    }

    pub fn oscillators(&self) -> usize {
        self.x.len() / self.dim
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn oscillator(&self, j: usize) -> &[f64] {
        &self.x[j * self.dim..(j + 1) * self.dim]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.x
    }

    /// `maxᵢ,ⱼ,ₖ |xᵢʲ − xᵢᵏ|`
    pub fn max_disagreement(&self) -> f64 {
        (0..self.dim)
            .map(|i| {
                let (lo, hi) = (0..self.oscillators())
                    .map(|j| self.x[j * self.dim + i])
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
                hi - lo
            })
            .fold(0.0, f64::max)
    }

    /// Root-mean-square deviation from the ensemble mean, over all states.
    pub fn rms_disagreement(&self) -> f64 {
        let n = self.oscillators();
        let mut acc = 0.0;
        for i in 0..self.dim {
            let mean = (0..n).map(|j| self.x[j * self.dim + i]).sum::<f64>() / n as f64;
            acc += (0..n).map(|j| (self.x[j * self.dim + i] - mean).powi(2)).sum::<f64>();
        }
        (acc / (n * self.dim) as f64).sqrt()
    }

    fn min_component(&self) -> Option<(usize, usize, f64)> {
        self.x
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .map(|(idx, &v)| (idx / self.dim, idx % self.dim, v))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Method {
    #[default]
    Rk4,
    Rkf45 {
        #[serde(default = "default_rel_tol")]
        rel_tol: f64,
        #[serde(default = "default_abs_tol")]
        abs_tol: f64,
    },
}

fn default_rel_tol() -> f64 {
    1e-8
}

fn default_abs_tol() -> f64 {
    1e-10
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialCondition {
    /// One state vector per oscillator.
    Explicit(Vec<Vec<f64>>),
    /// Independent uniform draws per oscillator and state.
    Uniform { lo: Vec<f64>, hi: Vec<f64> },
}

impl InitialCondition {
    pub fn uniform(dim: usize, lo: f64, hi: f64) -> Self {
        InitialCondition::Uniform {
            lo: vec![lo; dim],
            hi: vec![hi; dim],
        }
    }

    /// Draws the initial network state (deterministic in `seed`).
    pub fn realize(&self, oscillators: usize, dim: usize, seed: u64) -> Result<NetworkState> {
        let states = match self {
            InitialCondition::Explicit(rows) => {
                if rows.len() != oscillators || rows.iter().any(|r| r.len() != dim) {
                    return Err(Error::Config(format!(
                        "explicit initial state must be {oscillators} rows of {dim} values"
                    )));
                }
                rows.clone()
            }
            InitialCondition::Uniform { lo, hi } => {
                if lo.len() != dim || hi.len() != dim {
                    return Err(Error::Config(format!("uniform initial ranges must have {dim} entries")));
                }
                if lo
                    .iter()
                    .zip(hi)
                    .any(|(a, b)| !(*a > 0.0) || !(b >= a) || !b.is_finite())
                {
                    return Err(Error::Config("uniform initial ranges must satisfy 0 < lo <= hi".into()));
                }
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                (0..oscillators)
                    .map(|_| {
                        lo.iter()
                            .zip(hi)
                            .map(|(&a, &b)| if a == b { a } else { rng.gen_range(a..b) })
                            .collect()
                    })
                    .collect()
            }
        };
        if states.iter().flatten().any(|v| !(*v > 0.0) || !v.is_finite()) {
            return Err(Error::Config("initial states must be positive".into()));
        }
        NetworkState::new(&states)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub t_end: f64,
    pub dt: f64,
    pub method: Method,
    pub record_stride: usize,
    pub seed: u64,
    pub initial: InitialCondition,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            t_end: 600.0,
            dt: 0.01,
            method: Method::Rk4,
            record_stride: 10,
            seed: 1,
            initial: InitialCondition::uniform(3, 0.5, 1.5),
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::Config(format!("sim: dt must be positive, got {}", self.dt)));
        }
        if !(self.t_end > 0.0) || !self.t_end.is_finite() {
            return Err(Error::Config(format!(
                "sim: t_end must be positive, got {}",
                self.t_end
            )));
        }
        if self.record_stride == 0 {
            return Err(Error::Config("sim: record_stride must be >= 1".into()));
        }
        if let Method::Rkf45 { rel_tol, abs_tol } = self.method {
            if !(rel_tol > 0.0) || !(abs_tol > 0.0) {
                return Err(Error::Config("sim: rkf45 tolerances must be positive".into()));
            }
        }
        Ok(())
    }

    fn steps(&self) -> usize {
        (self.t_end / self.dt).round().max(1.0) as usize
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<NetworkState>,
    /// External input of every oscillator at each sample.
    pub inputs: Vec<Vec<f64>>,
    pub outputs_y1: Vec<Vec<f64>>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn oscillators(&self) -> usize {
        self.states.first().map(NetworkState::oscillators).unwrap_or(0)
    }

    pub fn last_state(&self) -> Option<&NetworkState> {
        self.states.last()
    }

    /// Time series of state `i` of oscillator `j`.
    pub fn series(&self, j: usize, i: usize) -> Vec<f64> {
        self.states.iter().map(|s| s.oscillator(j)[i]).collect()
    }

    /// CSV with header `t,osc1_x1,…,oscN_x{n−1},u1,…,uN`, 9 significant digits.
    pub fn write_csv(&self, mut w: impl Write) -> Result<()> {
        let n = self.oscillators();
        let dim = self.states.first().map(NetworkState::dim).unwrap_or(0);
        let mut header = String::from("t");
        for j in 1..=n {
            for i in 1..=dim {
                header.push_str(&format!(",osc{j}_x{i}"));
            }
        }
        for j in 1..=n {
            header.push_str(&format!(",u{j}"));
        }
        header.push('\n');
        w.write_all(header.as_bytes())?;
        let mut line = String::new();
        for (k, t) in self.times.iter().enumerate() {
            line.clear();
            line.push_str(&format_sig(*t, 9));
            for v in self.states[k].as_slice().iter().chain(&self.inputs[k]) {
                line.push(',');
                line.push_str(&format_sig(*v, 9));
            }
            line.push('\n');
            w.write_all(line.as_bytes())?;
        }
        Ok(())
    }
}

/// Identical oscillators coupled over a graph by a protocol.
#[derive(Debug, Clone)]
pub struct Network {
    model: CfsModel,
    graph: CouplingGraph,
    protocol: Protocol,
    laplacian: Matrix,
}

/// Right-hand side evaluation for the integrators, with its scratch space.
trait Dynamics {
    fn oscillators(&self) -> usize;
    fn dim(&self) -> usize;
    /// Fills `dx` and the external inputs `u` at `(t, x)`.
    fn eval(&self, t: f64, x: &[f64], dx: &mut [f64], u: &mut [f64], y1: &mut [f64]);
}

impl Dynamics for Network {
    fn oscillators(&self) -> usize {
        self.graph.len()
    }

    fn dim(&self) -> usize {
        self.model.state_dim()
    }

    fn eval(&self, _t: f64, x: &[f64], dx: &mut [f64], u: &mut [f64], y1: &mut [f64]) {
        let d = self.model.state_dim();
        for (j, y) in y1.iter_mut().enumerate() {
            *y = self.model.output_y1(&x[j * d..(j + 1) * d]);
        }
        coupling_inputs_into(&self.protocol, &self.laplacian, y1, u);
        for (j, uj) in u.iter().enumerate() {
            self.model
                .vector_field_into(&x[j * d..(j + 1) * d], *uj, &mut dx[j * d..(j + 1) * d]);
        }
    }
}

struct Driven<'a> {
    model: &'a CfsModel,
    input: &'a dyn Fn(f64) -> f64,
}

impl Dynamics for Driven<'_> {
    fn oscillators(&self) -> usize {
        1
    }

    fn dim(&self) -> usize {
        self.model.state_dim()
    }

    fn eval(&self, t: f64, x: &[f64], dx: &mut [f64], u: &mut [f64], y1: &mut [f64]) {
        u[0] = (self.input)(t);
        y1[0] = self.model.output_y1(x);
        self.model.vector_field_into(x, u[0], dx);
    }
}

struct Workspace {
    k: [Vec<f64>; 6],
    tmp: Vec<f64>,
    u: Vec<f64>,
    y1: Vec<f64>,
}

impl Workspace {
    fn new(len: usize, oscillators: usize) -> Self {
        Self {
            k: std::array::from_fn(|_| vec![0.0; len]),
            tmp: vec![0.0; len],
            u: vec![0.0; oscillators],
            y1: vec![0.0; oscillators],
        }
    }
}

fn rk4_step(sys: &dyn Dynamics, t: f64, x: &mut [f64], h: f64, ws: &mut Workspace) {
    let Workspace { k, tmp, u, y1 } = ws;
    let [k1, k2, k3, k4, _, _] = k;
    sys.eval(t, x, k1, u, y1);
    for i in 0..x.len() {
        tmp[i] = x[i] + 0.5 * h * k1[i];
    }
    sys.eval(t + 0.5 * h, tmp, k2, u, y1);
    for i in 0..x.len() {
        tmp[i] = x[i] + 0.5 * h * k2[i];
    }
    sys.eval(t + 0.5 * h, tmp, k3, u, y1);
    for i in 0..x.len() {
        tmp[i] = x[i] + h * k3[i];
    }
    sys.eval(t + h, tmp, k4, u, y1);
    for i in 0..x.len() {
        x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
}

// Fehlberg 4(5) tableau
const F_A: [[f64; 5]; 6] = [
    [0.0, 0.0, 0.0, 0.0, 0.0],
    [1.0 / 4.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 32.0, 9.0 / 32.0, 0.0, 0.0, 0.0],
    [1932.0 / 2197.0, -7200.0 / 2197.0, 7296.0 / 2197.0, 0.0, 0.0],
    [439.0 / 216.0, -8.0, 3680.0 / 513.0, -845.0 / 4104.0, 0.0],
    [-8.0 / 27.0, 2.0, -3544.0 / 2565.0, 1859.0 / 4104.0, -11.0 / 40.0],
];
const F_C: [f64; 6] = [0.0, 1.0 / 4.0, 3.0 / 8.0, 12.0 / 13.0, 1.0, 1.0 / 2.0];
const F_B4: [f64; 6] = [25.0 / 216.0, 0.0, 1408.0 / 2565.0, 2197.0 / 4104.0, -1.0 / 5.0, 0.0];
const F_B5: [f64; 6] = [
    16.0 / 135.0,
    0.0,
    6656.0 / 12825.0,
    28561.0 / 56430.0,
    -9.0 / 50.0,
    2.0 / 55.0,
];

/// One Fehlberg attempt; writes the 4th-order solution to `out` and returns
/// the scaled error norm.
#[allow(clippy::too_many_arguments)]
fn rkf45_attempt(
    sys: &dyn Dynamics,
    t: f64,
    x: &[f64],
    h: f64,
    rel_tol: f64,
    abs_tol: f64,
    ws: &mut Workspace,
    out: &mut [f64],
) -> f64 {
    let Workspace { k, tmp, u, y1 } = ws;
    for s in 0..6 {
        for i in 0..x.len() {
            let mut acc = x[i];
            for (r, a) in F_A[s].iter().enumerate().take(s) {
                acc += h * a * k[r][i];
            }
            tmp[i] = acc;
        }
        let (done, rest) = k.split_at_mut(s);
        let _ = done;
        sys.eval(t + F_C[s] * h, tmp, &mut rest[0], u, y1);
    }
    let mut err: f64 = 0.0;
    for i in 0..x.len() {
        let mut lo = 0.0;
        let mut hi = 0.0;
        for s in 0..6 {
            lo += F_B4[s] * k[s][i];
            hi += F_B5[s] * k[s][i];
        }
        out[i] = x[i] + h * lo;
        let scale = abs_tol + rel_tol * x[i].abs().max(out[i].abs());
        err = err.max((h * (hi - lo)).abs() / scale);
    }
    err
}

fn check_state(x: &[f64], dim: usize, t: f64) -> Result<()> {
    let mut min = (0usize, f64::INFINITY);
    for (idx, &v) in x.iter().enumerate() {
        if !v.is_finite() {
            return Err(Error::Divergence { t });
        }
        if v < min.1 {
            min = (idx, v);
        }
    }
    if min.1 < -POSITIVITY_TOL {
        return Err(Error::PositivityViolation {
            t,
            oscillator: min.0 / dim + 1,
            state: min.0 % dim + 1,
            value: min.1,
        });
    }
    Ok(())
}

struct Integrator<'a> {
    sys: &'a dyn Dynamics,
    method: Method,
    ws: Workspace,
    h_adaptive: f64,
    out: Vec<f64>,
}

impl<'a> Integrator<'a> {
    fn new(sys: &'a dyn Dynamics, method: Method, dt: f64) -> Self {
        let len = sys.oscillators() * sys.dim();
        Self {
            sys,
            method,
            ws: Workspace::new(len, sys.oscillators()),
            h_adaptive: dt,
            out: vec![0.0; len],
        }
    }

    /// Advances `x` from `t` to `t + dt`.
    fn advance(&mut self, t: f64, x: &mut [f64], dt: f64) -> Result<()> {
        match self.method {
            Method::Rk4 => {
                rk4_step(self.sys, t, x, dt, &mut self.ws);
                check_state(x, self.sys.dim(), t + dt)
            }
            Method::Rkf45 { rel_tol, abs_tol } => {
                let t_target = t + dt;
                let mut tc = t;
                let mut rejections = 0usize;
                while tc < t_target {
                    let remaining = t_target - tc;
                    let last = self.h_adaptive >= remaining * (1.0 - 1e-12);
                    let h = if last { remaining } else { self.h_adaptive };
                    let err = rkf45_attempt(self.sys, tc, x, h, rel_tol, abs_tol, &mut self.ws, &mut self.out);
                    if !err.is_finite() && h < 1e-14 * (1.0 + t_target.abs()) {
                        return Err(Error::Divergence { t: tc });
                    }
                    let factor = if err == 0.0 {
                        5.0
                    } else {
                        (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
                    };
                    if err <= 1.0 {
                        x.copy_from_slice(&self.out);
                        tc = if last { t_target } else { tc + h };
                        check_state(x, self.sys.dim(), tc)?;
                        if !last || factor < 1.0 {
                            self.h_adaptive = (h * factor).min(dt);
                        }
                        rejections = 0;
                    } else {
                        self.h_adaptive = h * if factor.is_finite() { factor } else { 0.2 };
                        rejections += 1;
                        if rejections > 100 {
                            return Err(Error::Divergence { t: tc });
                        }
                    }
                }
                Ok(())
            }
        }
    }
}

fn run(sys: &dyn Dynamics, initial: NetworkState, config: &SimConfig) -> Result<Trajectory> {
    config.validate()?;
    let dim = sys.dim();
    if initial.dim() != dim || initial.oscillators() != sys.oscillators() {
        return Err(Error::Config(format!(
            "initial state is {}x{}, network expects {}x{}",
            initial.oscillators(),
            initial.dim(),
            sys.oscillators(),
            dim
        )));
    }
    let steps = config.steps();
    let mut integ = Integrator::new(sys, config.method, config.dt);
    let mut x = initial.x.clone();
    let mut traj = Trajectory {
        times: Vec::with_capacity(steps / config.record_stride + 2),
        states: Vec::new(),
        inputs: Vec::new(),
        outputs_y1: Vec::new(),
    };
    let mut record = |step: usize, x: &[f64], ws: &mut Workspace| {
        let t = step as f64 * config.dt;
        let mut scratch = vec![0.0; x.len()];
        sys.eval(t, x, &mut scratch, &mut ws.u, &mut ws.y1);
        traj.times.push(t);
        traj.states.push(NetworkState { dim, x: x.to_vec() });
        traj.inputs.push(ws.u.clone());
        traj.outputs_y1.push(ws.y1.clone());
    };
    record(0, &x, &mut integ.ws);
    for step in 1..=steps {
        let t = (step - 1) as f64 * config.dt;
        integ.advance(t, &mut x, config.dt)?;
        if step % config.record_stride == 0 || step == steps {
            record(step, &x, &mut integ.ws);
        }
    }
    Ok(traj)
}

impl Network {
    pub fn new(model: CfsModel, graph: CouplingGraph, protocol: Protocol) -> Result<Self> {
        protocol.validate()?;
        let laplacian = graph.laplacian();
        Ok(Self {
            model,
            graph,
            protocol,
            laplacian,
        })
    }

    pub fn model(&self) -> &CfsModel {
        &self.model
    }

    pub fn graph(&self) -> &CouplingGraph {
        &self.graph
    }

    pub fn protocol(&self) -> &Protocol {
        &self.protocol
    }

    pub fn laplacian(&self) -> &Matrix {
        &self.laplacian
    }

    pub fn with_protocol(&self, protocol: Protocol) -> Result<Self> {
        Self::new(self.model.clone(), self.graph.clone(), protocol)
    }

    /// Coupled vector field at `state`; also returns the inputs used.
    pub fn vector_field(&self, state: &NetworkState) -> (Vec<f64>, Vec<f64>) {
        let mut dx = vec![0.0; state.x.len()];
        let mut u = vec![0.0; self.graph.len()];
        let mut y1 = vec![0.0; self.graph.len()];
        self.eval(0.0, &state.x, &mut dx, &mut u, &mut y1);
        (dx, u)
    }

    /// One RK4 step of size `dt`.
    pub fn step(&self, state: &NetworkState, dt: f64) -> Result<NetworkState> {
        self.step_with(state, dt, Method::Rk4)
    }

    pub fn step_with(&self, state: &NetworkState, dt: f64, method: Method) -> Result<NetworkState> {
        if state.dim() != self.model.state_dim() || state.oscillators() != self.graph.len() {
            return Err(Error::Config("state does not match network dimensions".into()));
        }
        let mut integ = Integrator::new(self, method, dt);
        let mut x = state.x.clone();
        integ.advance(0.0, &mut x, dt)?;
        Ok(NetworkState { dim: state.dim, x })
    }

    pub fn initial_state(&self, config: &SimConfig) -> Result<NetworkState> {
        config
            .initial
            .realize(self.graph.len(), self.model.state_dim(), config.seed)
    }

    pub fn simulate(&self, config: &SimConfig) -> Result<Trajectory> {
        let initial = self.initial_state(config)?;
        run(self, initial, config)
    }

    pub fn simulate_from(&self, initial: NetworkState, config: &SimConfig) -> Result<Trajectory> {
        run(self, initial, config)
    }
}

/// Single oscillator under a prescribed input signal `u_ext(t)`.
pub fn simulate_driven(
    model: &CfsModel,
    input: &dyn Fn(f64) -> f64,
    x0: &[f64],
    config: &SimConfig,
) -> Result<Trajectory> {
    let sys = Driven { model, input };
    run(&sys, NetworkState::new(&[x0.to_vec()])?, config)
}

/// RK4 simulation of a scalar block `ẋ = −f(x) + u(t)`, `y = g(x)`,
/// sampled at every step.
pub fn simulate_block(
    f: &KineticFunction,
    g: &KineticFunction,
    input: &dyn Fn(f64) -> f64,
    x0: f64,
    dt: f64,
    t_end: f64,
) -> Result<BlockTrajectory> {
    if !(dt > 0.0) || !(t_end > 0.0) {
        return Err(Error::Config("block simulation needs dt > 0 and t_end > 0".into()));
    }
    let steps = (t_end / dt).round() as usize;
    let rhs = |t: f64, x: f64| -f.value(x) + input(t);
    let mut tr = BlockTrajectory {
        t: Vec::with_capacity(steps + 1),
        x: Vec::with_capacity(steps + 1),
        u: Vec::with_capacity(steps + 1),
        y: Vec::with_capacity(steps + 1),
    };
    let mut x = x0;
    for k in 0..=steps {
        let t = k as f64 * dt;
        tr.t.push(t);
        tr.x.push(x);
        tr.u.push(input(t));
        tr.y.push(g.value(x));
        if k == steps {
            break;
        }
        let k1 = rhs(t, x);
        let k2 = rhs(t + 0.5 * dt, x + 0.5 * dt * k1);
        let k3 = rhs(t + 0.5 * dt, x + 0.5 * dt * k2);
        let k4 = rhs(t + dt, x + dt * k3);
        x += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if !x.is_finite() {
            return Err(Error::Divergence { t: t + dt });
        }
    }
    Ok(tr)
}

/// Disagreement diagnostics along a trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct SyncSeries {
    pub times: Vec<f64>,
    /// `e(t) = maxᵢ,ⱼ,ₖ |xᵢʲ(t) − xᵢᵏ(t)|`
    pub max_disagreement: Vec<f64>,
    pub rms: Vec<f64>,
    /// `‖Π·Y₁(t)‖` with `Π = I − (1/N)·1·1ᵀ`.
    pub output_disagreement: Vec<f64>,
}

impl SyncSeries {
    pub fn last(&self) -> Option<f64> {
        self.max_disagreement.last().copied()
    }

    /// Mean of `e(t)` over consecutive windows of length `width`.
    pub fn window_means(&self, t0: f64, width: f64) -> Vec<f64> {
        let mut out = Vec::new();
        let mut start = t0;
        let t_last = self.times.last().copied().unwrap_or(t0);
        while start + width <= t_last + 1e-9 {
            let vals: Vec<f64> = self
                .times
                .iter()
                .zip(&self.max_disagreement)
                .filter(|(t, _)| **t >= start && **t < start + width)
                .map(|(_, e)| *e)
                .collect();
            if !vals.is_empty() {
                out.push(vals.iter().sum::<f64>() / vals.len() as f64);
            }
            start += width;
        }
        out
    }
}

/// Norm of the projected outputs `‖Π·y‖`.
pub fn projected_norm(y: &[f64]) -> f64 {
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    y.iter().map(|v| (v - mean).powi(2)).sum::<f64>().sqrt()
}

/// Synchronization diagnostics, optionally restricted to `window = (t0, t1)`.
pub fn sync_metric(traj: &Trajectory, window: Option<(f64, f64)>) -> Result<SyncSeries> {
    if traj.oscillators() < 2 {
        return Err(Error::Analysis("sync metric needs at least two oscillators".into()));
    }
    let mut s = SyncSeries {
        times: Vec::new(),
        max_disagreement: Vec::new(),
        rms: Vec::new(),
        output_disagreement: Vec::new(),
    };
    for (k, &t) in traj.times.iter().enumerate() {
        if let Some((t0, t1)) = window {
            if t < t0 || t > t1 {
                continue;
            }
        }
        s.times.push(t);
        s.max_disagreement.push(traj.states[k].max_disagreement());
        s.rms.push(traj.states[k].rms_disagreement());
        s.output_disagreement.push(projected_norm(&traj.outputs_y1[k]));
    }
    Ok(s)
}

/// Mean peak-to-peak interval of a sampled signal, using local maxima refined
/// by a parabola through the three samples around each peak.
pub fn period_of_series(times: &[f64], values: &[f64]) -> Result<f64> {
    if values.len() < 3 {
        return Err(Error::NotOscillating { peaks: 0 });
    }
    let (lo, hi) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    // flat signals (up to rounding) have no peaks
    if hi - lo <= 1e-9 * (1.0 + hi.abs()) {
        return Err(Error::NotOscillating { peaks: 0 });
    }
    let mut peaks = Vec::new();
    for k in 1..values.len() - 1 {
        let (a, b, c) = (values[k - 1], values[k], values[k + 1]);
        if b > a && b >= c {
            let h = times[k + 1] - times[k];
            let denom = a - 2.0 * b + c;
            let offset = if denom != 0.0 { 0.5 * (a - c) / denom } else { 0.0 };
            peaks.push(times[k] + offset * h);
        }
    }
    if peaks.len() < 3 {
        return Err(Error::NotOscillating { peaks: peaks.len() });
    }
    Ok((peaks[peaks.len() - 1] - peaks[0]) / (peaks.len() - 1) as f64)
}

/// Free-running period of state `state` (0-based) of oscillator `oscillator`,
/// ignoring samples before `transient`.
pub fn period_estimate(traj: &Trajectory, oscillator: usize, state: usize, transient: f64) -> Result<f64> {
    let (times, values): (Vec<f64>, Vec<f64>) = traj
        .times
        .iter()
        .zip(&traj.states)
        .filter(|(t, _)| **t >= transient)
        .map(|(t, s)| (*t, s.oscillator(oscillator)[state]))
        .unzip();
    period_of_series(&times, &values)
}

impl NetworkState {
    /// Smallest component with its 1-based oscillator and state index.
    pub fn min_entry(&self) -> Option<(usize, usize, f64)> {
        self.min_component().map(|(j, i, v)| (j + 1, i + 1, v))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oscillator::{gonze_model, linear_goodwin, GonzeParams, LinearGoodwinParams};
    use approx::assert_relative_eq;

    fn gonze() -> CfsModel {
        gonze_model(&GonzeParams::default()).unwrap()
    }

    const SAT: KineticFunction = KineticFunction::SaturatingCoupling { m0: 0.0005, rho: 0.9 };

    #[test]
    fn coupling_inputs_examples() {
        let l = CouplingGraph::complete(4, 1.0).unwrap().laplacian();
        let same = vec![0.3; 4];
        let sat = Protocol::Saturated { c: 100.0, g0: SAT };
        for u in coupling_inputs(&sat, &l, &same) {
            assert_relative_eq!(u, 0.00025, max_relative = 1e-12);
        }
        for u in coupling_inputs(&Protocol::Linear { c: 3.0 }, &l, &same) {
            assert_eq!(u, 0.0);
        }
        let spread = vec![0.0, 5.0, -3.0, 100.0];
        for u in coupling_inputs(&sat, &l, &spread) {
            assert!(u > 0.0 && u < 0.0005);
        }
        assert_eq!(coupling_inputs(&Protocol::None, &l, &spread), vec![0.0; 4]);
        // linear: U = −c·L·y
        let lin = coupling_inputs(&Protocol::Linear { c: 2.0 }, &l, &[1.0, 0.0, 0.0, 0.0]);
        assert_eq!(lin, vec![-6.0, 2.0, 2.0, 2.0]);
    }

    /// Straightforward RK4 on the three Gonze equations, written out by hand.
    fn reference_rk4(x: [f64; 3], u: f64, h: f64) -> [f64; 3] {
        let rhs = |s: [f64; 3]| {
            [
                0.7 / (1.0 + s[2].powi(4)) - 0.35 * s[0] / (1.0 + s[0]) + u,
                0.7 * s[0] - 0.35 * s[1] / (1.0 + s[1]),
                0.7 * s[1] - 0.35 * s[2] / (1.0 + s[2]),
            ]
        };
        let add = |a: [f64; 3], b: [f64; 3], c: f64| [a[0] + c * b[0], a[1] + c * b[1], a[2] + c * b[2]];
        let k1 = rhs(x);
        let k2 = rhs(add(x, k1, h / 2.0));
        let k3 = rhs(add(x, k2, h / 2.0));
        let k4 = rhs(add(x, k3, h));
        [0, 1, 2].map(|i| x[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
    }

    #[test]
    fn single_step_matches_reference_rk4() {
        let net = Network::new(gonze(), CouplingGraph::complete(1, 1.0).unwrap(), Protocol::None).unwrap();
        let s = NetworkState::new(&[vec![1.0, 1.0, 1.0]]).unwrap();
        let next = net.step(&s, 0.001).unwrap();
        let r = reference_rk4([1.0, 1.0, 1.0], 0.0, 0.001);
        for (a, b) in next.as_slice().iter().zip(r) {
            assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn rk4_fourth_order_convergence() {
        let net = Network::new(gonze(), CouplingGraph::complete(1, 1.0).unwrap(), Protocol::None).unwrap();
        let run_to_one = |dt: f64| {
            let cfg = SimConfig {
                t_end: 1.0,
                dt,
                record_stride: 1_000_000,
                initial: InitialCondition::Explicit(vec![vec![1.0, 1.0, 1.0]]),
                ..Default::default()
            };
            net.simulate(&cfg).unwrap().last_state().unwrap().as_slice().to_vec()
        };
        let coarse = run_to_one(0.1);
        let fine = run_to_one(0.01);
        let reference = run_to_one(0.0005);
        let err = |a: &[f64]| a.iter().zip(&reference).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
        let ratio = err(&coarse) / err(&fine);
        assert!((5e3..2e4).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn equilibrium_stays_fixed() {
        let m = linear_goodwin(&LinearGoodwinParams::default()).unwrap();
        let net = Network::new(m.clone(), CouplingGraph::complete(1, 1.0).unwrap(), Protocol::None).unwrap();
        // equilibrium: x1 = Mfb(x3), x2 = x1, x3 = x2 ⇒ x = 0.95/(1+x⁴)
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid - 0.95 / (1.0 + mid.powi(4)) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let x = 0.5 * (lo + hi);
        let s = NetworkState::new(&[vec![x, x, x]]).unwrap();
        let (dx, _) = net.vector_field(&s);
        assert!(dx.iter().all(|v| v.abs() < 1e-14));
        let next = net.step(&s, 0.01).unwrap();
        for v in next.as_slice() {
            assert!((v - x).abs() < 1e-14);
        }
    }

    #[test]
    fn sync_metric_examples() {
        let s = NetworkState::new(&[vec![1.0, 1.0, 1.0], vec![2.0, 2.0, 2.0]]).unwrap();
        assert_eq!(s.max_disagreement(), 1.0);
        assert_relative_eq!(s.rms_disagreement(), 0.5);
        assert_relative_eq!(projected_norm(&[1.0, 2.0]), 0.5f64.sqrt());
    }

    #[test]
    fn identical_initial_states_stay_synchronized() {
        let net = Network::new(
            gonze(),
            CouplingGraph::complete(5, 1.0).unwrap(),
            Protocol::Saturated { c: 10.0, g0: SAT },
        )
        .unwrap();
        let cfg = SimConfig {
            t_end: 200.0,
            initial: InitialCondition::Explicit(vec![vec![0.8, 1.1, 0.6]; 5]),
            ..Default::default()
        };
        let tr = net.simulate(&cfg).unwrap();
        let s = sync_metric(&tr, None).unwrap();
        assert!(s.max_disagreement.iter().all(|e| *e <= 1e-12));
        assert!(s.output_disagreement.iter().all(|e| *e <= 1e-12));
    }

    #[test]
    fn single_oscillator_saturated_gets_constant_half_input() {
        let g = CouplingGraph::complete(1, 1.0).unwrap();
        let cfg = SimConfig {
            t_end: 50.0,
            initial: InitialCondition::Explicit(vec![vec![1.0, 1.0, 1.0]]),
            ..Default::default()
        };
        let sat = Network::new(gonze(), g.clone(), Protocol::Saturated { c: 100.0, g0: SAT }).unwrap();
        let tr = sat.simulate(&cfg).unwrap();
        assert!(tr.inputs.iter().all(|u| u[0] == 0.00025));
        let driven = simulate_driven(&gonze(), &|_| 0.00025, &[1.0, 1.0, 1.0], &cfg).unwrap();
        assert_eq!(tr.states, driven.states);

        let lin = Network::new(gonze(), g.clone(), Protocol::Linear { c: 5.0 }).unwrap();
        let free = Network::new(gonze(), g, Protocol::None).unwrap();
        assert_eq!(lin.simulate(&cfg).unwrap().states, free.simulate(&cfg).unwrap().states);
    }

    #[test]
    fn seeded_runs_are_reproducible() {
        let net = Network::new(
            gonze(),
            CouplingGraph::complete(3, 1.0).unwrap(),
            Protocol::Saturated { c: 1.0, g0: SAT },
        )
        .unwrap();
        let cfg = SimConfig {
            t_end: 20.0,
            seed: 42,
            ..Default::default()
        };
        assert_eq!(net.simulate(&cfg).unwrap(), net.simulate(&cfg).unwrap());
        let other = SimConfig {
            seed: 43,
            ..cfg.clone()
        };
        assert_ne!(
            net.simulate(&cfg).unwrap().states[0],
            net.simulate(&other).unwrap().states[0]
        );
    }

    #[test]
    fn rkf45_agrees_with_rk4() {
        let net = Network::new(
            gonze(),
            CouplingGraph::complete(3, 1.0).unwrap(),
            Protocol::Saturated { c: 10.0, g0: SAT },
        )
        .unwrap();
        let base = SimConfig {
            t_end: 50.0,
            dt: 0.01,
            ..Default::default()
        };
        let rk4 = net.simulate(&base).unwrap();
        let rkf = net
            .simulate(&SimConfig {
                dt: 0.5,
                record_stride: 1,
                method: Method::Rkf45 {
                    rel_tol: 1e-10,
                    abs_tol: 1e-12,
                },
                ..base.clone()
            })
            .unwrap();
        let a = rk4.last_state().unwrap().as_slice();
        let b = rkf.last_state().unwrap().as_slice();
        for (p, q) in a.iter().zip(b) {
            assert!((p - q).abs() < 1e-6, "{p} vs {q}");
        }
    }

    #[test]
    fn coarse_step_on_fast_chain_violates_positivity() {
        let m = linear_goodwin(&LinearGoodwinParams {
            degradation: 5.0,
            ..Default::default()
        })
        .unwrap();
        let net = Network::new(m, CouplingGraph::complete(1, 1.0).unwrap(), Protocol::None).unwrap();
        let cfg = SimConfig {
            t_end: 50.0,
            dt: 1.0,
            record_stride: 1,
            initial: InitialCondition::Explicit(vec![vec![1.0, 1.0, 1.0]]),
            ..Default::default()
        };
        assert!(matches!(
            net.simulate(&cfg),
            Err(Error::PositivityViolation { .. }) | Err(Error::Divergence { .. })
        ));
    }

    #[test]
    fn period_of_sine() {
        let times: Vec<f64> = (0..20_000).map(|k| k as f64 * 0.01).collect();
        let vals: Vec<f64> = times
            .iter()
            .map(|t| (2.0 * std::f64::consts::PI * t / 10.0).sin())
            .collect();
        let p = period_of_series(&times, &vals).unwrap();
        assert!((p - 10.0).abs() < 0.01);
    }

    #[test]
    fn constant_signal_is_not_oscillating() {
        let times: Vec<f64> = (0..100).map(|k| k as f64).collect();
        assert!(matches!(
            period_of_series(&times, &[2.0; 100]),
            Err(Error::NotOscillating { peaks: 0 })
        ));
    }

    #[test]
    fn csv_layout() {
        let net = Network::new(
            gonze(),
            CouplingGraph::complete(2, 1.0).unwrap(),
            Protocol::Saturated { c: 1.0, g0: SAT },
        )
        .unwrap();
        let cfg = SimConfig {
            t_end: 0.05,
            record_stride: 2,
            initial: InitialCondition::Explicit(vec![vec![1.0, 1.0, 1.0], vec![0.5, 0.5, 0.5]]),
            ..Default::default()
        };
        let tr = net.simulate(&cfg).unwrap();
        let mut buf = Vec::new();
        tr.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "t,osc1_x1,osc1_x2,osc1_x3,osc2_x1,osc2_x2,osc2_x3,u1,u2"
        );
        let first: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(&first[..7], &["0", "1", "1", "1", "0.5", "0.5", "0.5"]);
        // samples at steps 0, 2, 4 and the final step 5
        assert_eq!(text.lines().count(), 1 + 4);
        assert!(!text.contains('\r'));
    }
}
