//! JSON scenarios: model, graph, protocol, integration settings, an optional
//! sweep over the coupling gain, and the runners behind `simulate` and
//! `analyze`.
//!
//! A scenario may name a built-in `preset`; the sections it spells out are
//! merged over the preset key by key. Unknown fields are rejected everywhere.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::analysis::{analyze, AnalysisReport};
use crate::error::{Error, Result};
use crate::format::format_sig;
use crate::graph::{CouplingGraph, GraphSpec};
use crate::kinetics::KineticFunction;
use crate::netsim::{period_estimate, sync_metric, InitialCondition, Method, Network, Protocol, SimConfig};
use crate::oscillator::{gonze_model, linear_goodwin, Block, CfsModel, GonzeParams, LinearGoodwinParams};

pub const SCENARIO_PRESETS: [&str; 3] = ["gonze-fig", "gonze2005", "goodwin-linear"];
pub const THREADS_ENV: &str = "GOODWIN_SYNC_THREADS";

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    /// Built-in scenario used as the base.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    pub model: ModelSpec,
    pub graph: GraphSpec,
    pub protocol: ProtocolSpec,
    pub sim: SimSpec,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSpec>,
    pub output: OutputSpec,
    pub analysis: AnalysisSpec,
}

/// Named model with parameter overrides, or explicit blocks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSpec {
    /// `gonze2005` or `goodwin-linear`; ignored when `blocks` is given.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(skip_serializing_if = "Map::is_empty")]
    pub overrides: Map<String, Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub blocks: Option<Vec<Block>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub feedback: Option<KineticFunction>,
}

impl Default for ModelSpec {
    fn default() -> Self {
        Self {
            preset: Some("gonze2005".into()),
            overrides: Map::new(),
            blocks: None,
            feedback: None,
        }
    }
}

impl ModelSpec {
    pub fn build(&self) -> Result<CfsModel> {
        if let Some(blocks) = &self.blocks {
            if !self.overrides.is_empty() {
                return Err(Error::Config(
                    "model: overrides apply to presets, not to explicit blocks".into(),
                ));
            }
            let feedback = self
                .feedback
                .ok_or_else(|| Error::Config("model: explicit blocks need a feedback map".into()))?;
            return CfsModel::new(blocks.clone(), feedback);
        }
        if self.feedback.is_some() {
            return Err(Error::Config("model: feedback given without blocks".into()));
        }
        let overrides = Value::Object(self.overrides.clone());
        let bad = |e: serde_json::Error| Error::Config(format!("model.overrides: {e}"));
        match self.preset.as_deref().unwrap_or("gonze2005") {
            "gonze2005" => gonze_model(&serde_json::from_value::<GonzeParams>(overrides).map_err(bad)?),
            "goodwin-linear" => linear_goodwin(&serde_json::from_value::<LinearGoodwinParams>(overrides).map_err(bad)?),
            other => Err(Error::Config(format!(
                "model: unknown preset `{other}` (expected gonze2005 or goodwin-linear)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProtocolSpec {
    None,
    Linear {
        c: f64,
    },
    Saturated {
        c: f64,
        #[serde(rename = "M0", alias = "m0")]
        m0: f64,
        rho: f64,
    },
}

impl Default for ProtocolSpec {
    fn default() -> Self {
        ProtocolSpec::Saturated {
            c: 1.0,
            m0: 0.0005,
            rho: 0.9,
        }
    }
}

impl ProtocolSpec {
    pub fn build(&self) -> Result<Protocol> {
        let p = match *self {
            ProtocolSpec::None => Protocol::None,
            ProtocolSpec::Linear { c } => Protocol::Linear { c },
            ProtocolSpec::Saturated { c, m0, rho } => Protocol::Saturated {
                c,
                g0: KineticFunction::saturating_coupling(m0, rho)
                    .map_err(|e| Error::Config(format!("protocol: {e}")))?,
            },
        };
        p.validate()?;
        Ok(p)
    }

    pub fn gain(&self) -> Option<f64> {
        match *self {
            ProtocolSpec::None => None,
            ProtocolSpec::Linear { c } | ProtocolSpec::Saturated { c, .. } => Some(c),
        }
    }
}

/// Scalar shared by all states, or one value per state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PerState {
    Scalar(f64),
    Each(Vec<f64>),
}

impl PerState {
    fn expand(&self, dim: usize) -> Vec<f64> {
        match self {
            PerState::Scalar(v) => vec![*v; dim],
            PerState::Each(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialSpec {
    Uniform { lo: PerState, hi: PerState },
    Explicit { states: Vec<Vec<f64>> },
}

impl Default for InitialSpec {
    fn default() -> Self {
        InitialSpec::Uniform {
            lo: PerState::Scalar(0.5),
            hi: PerState::Scalar(1.5),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimSpec {
    pub t_end: f64,
    pub dt: f64,
    pub method: Method,
    pub record_stride: usize,
    pub seed: u64,
    pub initial: InitialSpec,
}

impl Default for SimSpec {
    fn default() -> Self {
        let d = SimConfig::default();
        Self {
            t_end: d.t_end,
            dt: d.dt,
            method: d.method,
            record_stride: d.record_stride,
            seed: d.seed,
            initial: InitialSpec::default(),
        }
    }
}

impl SimSpec {
    pub fn build(&self, state_dim: usize) -> Result<SimConfig> {
        let initial = match &self.initial {
            InitialSpec::Uniform { lo, hi } => InitialCondition::Uniform {
                lo: lo.expand(state_dim),
                hi: hi.expand(state_dim),
            },
            InitialSpec::Explicit { states } => InitialCondition::Explicit(states.clone()),
        };
        let cfg = SimConfig {
            t_end: self.t_end,
            dt: self.dt,
            method: self.method,
            record_stride: self.record_stride,
            seed: self.seed,
            initial,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub c: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSpec {
    pub dir: PathBuf,
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisSpec {
    /// Box inflation for the secant gains; default `1e-6·max(x̄, 1)`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    /// Multiply the gain product by `cosⁿ(π/n)`.
    pub secant_factor: bool,
}

/// Built-in scenario by name.
pub fn scenario_preset(name: &str) -> Result<ScenarioConfig> {
    let base = ScenarioConfig::default();
    match name {
        // ten clocks, all-to-all, swept over the coupling gain
        "gonze-fig" => Ok(ScenarioConfig {
            preset: None,
            sweep: Some(SweepSpec {
                c: vec![0.0, 1.0, 10.0, 100.0],
            }),
            ..base
        }),
        "gonze2005" => Ok(ScenarioConfig {
            protocol: ProtocolSpec::Saturated {
                c: 100.0,
                m0: 0.0005,
                rho: 0.9,
            },
            ..base
        }),
        "goodwin-linear" => Ok(ScenarioConfig {
            model: ModelSpec {
                preset: Some("goodwin-linear".into()),
                ..ModelSpec::default()
            },
            protocol: ProtocolSpec::Saturated {
                c: 0.01,
                m0: 1.0,
                rho: 0.9,
            },
            sim: SimSpec {
                t_end: 100.0,
                ..SimSpec::default()
            },
            ..base
        }),
        other => Err(Error::Config(format!(
            "unknown preset `{other}` (available: {})",
            SCENARIO_PRESETS.join(", ")
        ))),
    }
}

/// Recursive merge; objects whose `type` tag changes are replaced wholesale.
fn merge(base: &mut Value, over: Value) {
    match (base, over) {
        (Value::Object(b), Value::Object(o)) => {
            let retagged = matches!((b.get("type"), o.get("type")), (Some(x), Some(y)) if x != y);
            if retagged {
                *b = o;
                return;
            }
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

/// Parses a scenario document. `preset` (from the command line) takes
/// precedence over a `preset` key in the document.
pub fn parse_scenario(text: &str, preset: Option<&str>) -> Result<ScenarioConfig> {
    // typed pass first, for line/field diagnostics
    let own: ScenarioConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
    let Some(name) = preset.map(str::to_owned).or(own.preset.clone()) else {
        return Ok(own);
    };
    let raw: Value = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
    let mut merged = serde_json::to_value(scenario_preset(&name)?).map_err(|e| Error::Config(e.to_string()))?;
    merge(&mut merged, raw);
    if let Value::Object(m) = &mut merged {
        m.remove("preset");
    }
    serde_json::from_value(merged).map_err(|e| Error::Config(e.to_string()))
}

pub fn load_scenario(path: &Path, preset: Option<&str>) -> Result<ScenarioConfig> {
    let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    parse_scenario(&text, preset).map_err(|e| match e {
        Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
        other => other,
    })
}

/// Validated, built scenario.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub model: CfsModel,
    pub graph: CouplingGraph,
    pub protocol: Protocol,
    pub sim: SimConfig,
    pub sweep: Vec<f64>,
}

impl Scenario {
    pub fn build(config: ScenarioConfig) -> Result<Self> {
        let config_err = |e: Error| match e {
            Error::Config(_) => e,
            other => Error::Config(other.to_string()),
        };
        let model = config.model.build().map_err(config_err)?;
        let graph = config.graph.build().map_err(config_err)?;
        let protocol = config.protocol.build().map_err(config_err)?;
        let sim = config.sim.build(model.state_dim())?;
        let sweep = match &config.sweep {
            Some(s) => {
                if s.c.is_empty() {
                    return Err(Error::Config("sweep.c must not be empty".into()));
                }
                if s.c.iter().any(|c| !(*c >= 0.0) || !c.is_finite()) {
                    return Err(Error::Config("sweep.c values must be finite and >= 0".into()));
                }
                for (i, a) in s.c.iter().enumerate() {
                    if s.c[..i].contains(a) {
                        return Err(Error::Config(format!("sweep.c contains {a} twice")));
                    }
                }
                if matches!(protocol, Protocol::None) {
                    return Err(Error::Config("sweep needs a linear or saturated protocol".into()));
                }
                s.c.clone()
            }
            None => protocol.coupling_gain().into_iter().collect(),
        };
        Ok(Self {
            config,
            model,
            graph,
            protocol,
            sim,
            sweep,
        })
    }

    pub fn from_preset(name: &str) -> Result<Self> {
        Self::build(scenario_preset(name)?)
    }

    /// Coupling gains to run; a single `None` for the uncoupled protocol.
    pub fn runs(&self) -> Vec<Option<f64>> {
        if self.sweep.is_empty() {
            vec![None]
        } else {
            self.sweep.iter().map(|c| Some(*c)).collect()
        }
    }

    pub fn network(&self, c: Option<f64>) -> Result<Network> {
        let protocol = c.map_or(self.protocol, |c| self.protocol.with_gain(c));
        Network::new(self.model.clone(), self.graph.clone(), protocol)
    }

    pub fn analyze(&self) -> AnalysisReport {
        analyze(
            &self.model,
            &self.graph,
            self.protocol.saturation(),
            self.protocol.coupling_gain(),
            self.config.analysis.epsilon,
            self.config.analysis.secant_factor,
        )
    }
}

/// End-of-run figures for one sweep entry.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub c: Option<f64>,
    pub csv: PathBuf,
    pub t_end: f64,
    pub e_end: Option<f64>,
    pub rms_end: Option<f64>,
    pub output_disagreement_end: Option<f64>,
    pub period: Result<f64>,
    pub u_min: f64,
    pub u_max: f64,
    pub min_state: f64,
}

pub fn csv_name(c: Option<f64>) -> String {
    match c {
        Some(c) => format!("traj_c{}.csv", format_sig(c, 9)),
        None => "traj.csv".into(),
    }
}

fn run_one(scn: &Scenario, c: Option<f64>, dir: &Path) -> Result<RunSummary> {
    let net = scn.network(c)?;
    let traj = net.simulate(&scn.sim)?;
    let csv = dir.join(csv_name(c));
    let mut buf = Vec::new();
    traj.write_csv(&mut buf)?;
    fs::write(&csv, buf)?;
    let sync = if traj.oscillators() >= 2 {
        Some(sync_metric(&traj, None)?)
    } else {
        None
    };
    let last = |v: &Vec<f64>| v.last().copied();
    let (u_min, u_max) = traj
        .inputs
        .iter()
        .flatten()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &u| (a.min(u), b.max(u)));
    Ok(RunSummary {
        c,
        csv,
        t_end: *traj.times.last().unwrap_or(&0.0),
        e_end: sync.as_ref().and_then(|s| last(&s.max_disagreement)),
        rms_end: sync.as_ref().and_then(|s| last(&s.rms)),
        output_disagreement_end: sync.as_ref().and_then(|s| last(&s.output_disagreement)),
        period: period_estimate(&traj, 0, 0, 100.0),
        u_min,
        u_max,
        min_state: traj
            .states
            .iter()
            .flat_map(|s| s.as_slice().iter().copied())
            .fold(f64::INFINITY, f64::min),
    })
}

/// Worker count: `GOODWIN_SYNC_THREADS` if set, else the machine's
/// parallelism, never more than the number of jobs.
pub fn worker_count(jobs: usize) -> usize {
    let cap = std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|n| *n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1));
    cap.min(jobs).max(1)
}

/// Runs every sweep entry, writes one CSV each plus `summary.txt`.
pub fn run_simulate(scn: &Scenario, out_dir: &Path) -> Result<Vec<RunSummary>> {
    fs::create_dir_all(out_dir)?;
    let runs = scn.runs();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(worker_count(runs.len()))
        .build()
        .map_err(|e| Error::Io(e.to_string()))?;
    let results: Vec<Result<RunSummary>> =
        pool.install(|| runs.par_iter().map(|c| run_one(scn, *c, out_dir)).collect());
    let summaries = results.into_iter().collect::<Result<Vec<_>>>()?;
    fs::write(out_dir.join("summary.txt"), summary_text(scn, &summaries))?;
    Ok(summaries)
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "na".into(), |v| format_sig(v, 9))
}

pub fn summary_text(scn: &Scenario, runs: &[RunSummary]) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "# N={} n={} t_end={} dt={} seed={}",
        scn.graph.len(),
        scn.model.n(),
        format_sig(scn.sim.t_end, 9),
        format_sig(scn.sim.dt, 9),
        scn.sim.seed
    );
    for r in runs {
        let period = match &r.period {
            Ok(p) => format_sig(*p, 9),
            Err(_) => "none".into(),
        };
        let _ = writeln!(
            s,
            "c={} file={} t_end={} e_end={} rms_end={} output_disagreement_end={} period_osc1_x1={} u_min={} u_max={} min_state={}",
            opt(r.c),
            r.csv.file_name().and_then(|f| f.to_str()).unwrap_or(""),
            format_sig(r.t_end, 9),
            opt(r.e_end),
            opt(r.rms_end),
            opt(r.output_disagreement_end),
            period,
            format_sig(r.u_min, 9),
            format_sig(r.u_max, 9),
            format_sig(r.min_state, 9),
        );
    }
    s
}

fn list(v: &[f64]) -> String {
    v.iter().map(|x| format_sig(*x, 9)).collect::<Vec<_>>().join(",")
}

/// Human-readable report followed by `key=value` lines.
pub fn analysis_text(rep: &AnalysisReport, g0: Option<&KineticFunction>) -> String {
    let mut h = String::new();
    let mut kv: Vec<(String, String)> = Vec::new();
    let mut put = |k: &str, v: String| kv.push((k.to_string(), v));

    let _ = writeln!(h, "Cyclic feedback chain of {} blocks", rep.n);
    let _ = writeln!(
        h,
        "  coupling bound M0 = {}, feedback bound Mn = {}",
        format_sig(rep.m0, 9),
        format_sig(rep.mn, 9)
    );
    put("n", rep.n.to_string());
    put("M0", format_sig(rep.m0, 9));
    put("Mn", format_sig(rep.mn, 9));
    match &rep.lambda2 {
        Ok(l2) => {
            let _ = writeln!(
                h,
                "  graph: lambda2 = {}, |L|inf = {}",
                format_sig(*l2, 9),
                format_sig(rep.l_norm, 9)
            );
            put("lambda2", format_sig(*l2, 9));
        }
        Err(e) => {
            let _ = writeln!(h, "  graph: {e}");
            put("lambda2", "na".into());
        }
    }
    put("L_norm", format_sig(rep.l_norm, 9));
    match &rep.gains {
        Ok(g) => {
            let _ = writeln!(h, "Ultimate bounds x_bar = [{}]", list(&g.x_bars));
            let _ = writeln!(
                h,
                "Secant gains gamma = [{}] (box inflation {})",
                list(&g.gammas),
                format_sig(g.epsilon, 3)
            );
            let _ = writeln!(
                h,
                "iOFP gain k = {} (with cos^n(pi/n) factor: {}), using {}",
                format_sig(g.k_eps, 9),
                format_sig(g.k_secant, 9),
                if rep.secant_factor { "the factor" } else { "no factor" }
            );
            let _ = writeln!(h, "Output bound y* = {}", format_sig(g.y_star, 9));
            put("bounds", "ok".into());
            put("x_bar", list(&g.x_bars));
            put("gamma", list(&g.gammas));
            put("epsilon", format_sig(g.epsilon, 9));
            put("k_eps", format_sig(g.k_eps, 9));
            put("k_secant", format_sig(g.k_secant, 9));
            put("y_star", format_sig(g.y_star, 9));
        }
        Err(e) => {
            let _ = writeln!(h, "Ultimate-bound recursion inapplicable: {e}");
            let _ = writeln!(
                h,
                "  no secant gains or coupling threshold can be certified for this model"
            );
            put("bounds", "inapplicable".into());
            put("bounds_error", e.to_string());
            if let Error::BoundUndefined { block, value, sup, .. } = e {
                put("failing_block", block.to_string());
                put("failing_value", format_sig(*value, 10));
                put("failing_sup", format_sig(*sup, 10));
            }
        }
    }
    match &rep.threshold {
        Some(Ok(t)) => {
            let _ = writeln!(
                h,
                "Coupling threshold: c_min = {} (lhs {} vs k {})",
                format_sig(t.c_min, 9),
                format_sig(t.lhs_at_c, 9),
                format_sig(t.rhs, 9)
            );
            put("threshold", "ok".into());
            put("c_min", format_sig(t.c_min, 9));
            put("converged", t.converged.to_string());
        }
        Some(Err(e)) => {
            let _ = writeln!(h, "Coupling threshold: none ({e})");
            put("threshold", "none".into());
            put("threshold_error", e.to_string());
        }
        None => {
            let _ = writeln!(h, "Coupling threshold: not computed");
            put("threshold", "na".into());
        }
    }
    if let Some(c) = rep.coupling_gain {
        put("c", format_sig(c, 9));
        if let Some(ok) = g0.and_then(|g| rep.configured_gain_certified(g)) {
            let _ = writeln!(
                h,
                "Configured c = {} {} the strength inequality",
                format_sig(c, 9),
                if ok { "satisfies" } else { "does not satisfy" }
            );
            put("c_certified", ok.to_string());
        }
    }
    h.push('\n');
    for (k, v) in kv {
        let _ = writeln!(h, "{k}={v}");
    }
    h
}
