//! Certificate calculus for coupled Goodwin oscillators.
//!
//! The pipeline is: ultimate bounds `x̄ᵢ` from the inverse-kinetics recursion,
//! secant gains `γᵢ` over the state box `[0, x̄ᵢ + ε]`, the iOFP gain `k` of the
//! cyclic chain, and finally the smallest coupling gain `c` with
//! `c·ν(c·‖L‖∞·ȳ*)·λ₂ > k`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::CouplingGraph;
use crate::kinetics::{IntervalBound, KineticFunction};
use crate::oscillator::CfsModel;

const GAIN_GRID_POINTS: usize = 10_000;
const GOLDEN_ITER: usize = 200;
const THRESHOLD_C_LO: f64 = 1e-6;
const THRESHOLD_C_HI: f64 = 1e9;
const THRESHOLD_GRID_POINTS: usize = 2_001;
const STATIC_CHECK_PAIRS: usize = 1_000;

/// `Φ(x) = ∫₁ˣ ds / f(s)`.
pub fn phi(f: &KineticFunction, x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::Domain {
            function: "phi",
            x,
            lo: 0.0,
            hi: f64::INFINITY,
        });
    }
    Ok(match *f {
        KineticFunction::Linear { slope } => x.ln() / slope,
        KineticFunction::Identity => x.ln(),
        KineticFunction::MichaelisMenten { vmax, k } => (k * x.ln() + x - 1.0) / vmax,
        KineticFunction::Affine { slope, offset } if offset >= 0.0 => {
            ((slope * x + offset) / (slope + offset)).ln() / slope
        }
        _ => {
            if f.value(x.min(1.0)) <= 0.0 {
                return Err(Error::Analysis(format!(
                    "phi: {} is not positive on (0, inf)",
                    f.name()
                )));
            }
            let (a, b, sign) = if x >= 1.0 { (1.0, x, 1.0) } else { (x, 1.0, -1.0) };
            sign * adaptive_simpson(&|s| 1.0 / f.value(s), a, b, 1e-9)
        }
    })
}

/// Whether `Φ(0⁺) = −∞` and `Φ(+∞) = +∞`, decided per variant.
pub fn phi_diverges(f: &KineticFunction) -> bool {
    match f {
        // 1/f behaves like c/s near 0 and f grows at most linearly
        KineticFunction::Linear { .. } | KineticFunction::Identity | KineticFunction::MichaelisMenten { .. } => true,
        KineticFunction::Affine { offset, .. } => *offset == 0.0,
        // f(0) > 0 makes Φ(0⁺) finite; the Hill map is not positive
        KineticFunction::SaturatingCoupling { .. } | KineticFunction::HillInhibition { .. } => false,
    }
}

pub(crate) fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, rel_tol: f64) -> f64 {
    fn simpson(fa: f64, fm: f64, fb: f64, a: f64, b: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: usize,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = simpson(fa, flm, fm, a, m);
        let right = simpson(fm, frm, fb, m, b);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
            + recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
    let fa = f(a);
    let fb = f(b);
    let fm = f(0.5 * (a + b));
    let whole = simpson(fa, fm, fb, a, b);
    let tol = (rel_tol * whole.abs()).max(f64::MIN_POSITIVE);
    recurse(f, a, b, fa, fm, fb, whole, tol, 50)
}

/// Ultimate bounds `x̄ᵢ = hᵢ(M)` with `M = m0 + Mₙ`, `h₁ = f₁⁻¹` and
/// `hᵢ = fᵢ⁻¹ ∘ gᵢ₋₁ ∘ hᵢ₋₁`. The bounds do not depend on initial conditions.
pub fn ultimate_bounds(model: &CfsModel, m0: f64) -> Result<Vec<f64>> {
    if !(m0 >= 0.0) || !m0.is_finite() {
        return Err(Error::Analysis(format!("M0 must be finite and >= 0, got {m0}")));
    }
    let total = m0 + model.feedback_bound();
    let mut level = total;
    let mut bounds = Vec::with_capacity(model.state_dim());
    for (i, b) in model.blocks().iter().enumerate() {
        let x = b.f.inverse(level).map_err(|_| Error::BoundUndefined {
            block: i + 1,
            value: level,
            sup: b.f.sup_value(),
            total_input: total,
        })?;
        bounds.push(x);
        level = b.g.value(x);
    }
    Ok(bounds)
}

/// Maximum of `h` over `[lo, hi]`: dense grid, endpoint shortcut when the
/// sampled values are monotone, golden-section refinement otherwise.
/// Returns `(argmax, max)`; `max` is infinite if any sample is.
pub fn maximize_on_interval(h: impl Fn(f64) -> f64, interval: IntervalBound) -> (f64, f64) {
    let IntervalBound { lo, hi } = interval;
    if hi <= lo {
        return (lo, h(lo));
    }
    let step = (hi - lo) / GAIN_GRID_POINTS as f64;
    let xs: Vec<f64> = (0..=GAIN_GRID_POINTS)
        .map(|i| {
            if i == GAIN_GRID_POINTS {
                hi
            } else {
                lo + step * i as f64
            }
        })
        .collect();
    let vals: Vec<f64> = xs.iter().map(|&x| h(x)).collect();
    if let Some(i) = vals.iter().position(|v| v.is_infinite() && *v > 0.0) {
        return (xs[i], f64::INFINITY);
    }
    if vals.windows(2).all(|w| w[1] >= w[0]) {
        return (hi, vals[GAIN_GRID_POINTS]);
    }
    if vals.windows(2).all(|w| w[1] <= w[0]) {
        return (lo, vals[0]);
    }
    let (best, _) = vals.iter().enumerate().fold(
        (0, f64::NEG_INFINITY),
        |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc },
    );
    let mut a = xs[best.saturating_sub(1)];
    let mut b = xs[(best + 1).min(GAIN_GRID_POINTS)];
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (h(c), h(d));
    for _ in 0..GOLDEN_ITER {
        if (b - a).abs() <= 1e-12 * (1.0 + a.abs().max(b.abs())) {
            break;
        }
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = h(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = h(d);
        }
    }
    let x = 0.5 * (a + b);
    let candidates = [(xs[best], vals[best]), (x, h(x)), (c, fc), (d, fd)];
    candidates
        .into_iter()
        .fold((lo, f64::NEG_INFINITY), |acc, p| if p.1 > acc.1 { p } else { acc })
}

/// `max_{x ∈ interval} g′(x)/f′(x)`.
pub fn max_secant_ratio(f: &KineticFunction, g: &KineticFunction, interval: IntervalBound) -> f64 {
    maximize_on_interval(|x| g.derivative_value(x) / f.derivative_value(x), interval).1
}

/// `max_{y ∈ interval} g′(y)`.
pub fn max_derivative(g: &KineticFunction, interval: IntervalBound) -> f64 {
    maximize_on_interval(|y| g.derivative_value(y), interval).1
}

/// `inf_{x ∈ interval} g′(x)`.
pub fn min_derivative(g: &KineticFunction, interval: IntervalBound) -> f64 {
    -maximize_on_interval(|x| -g.derivative_value(x), interval).1
}

/// Secant gains `γ₁ … γₙ` over the boxes `[0, x̄ᵢ + ε]`.
pub fn secant_gains(model: &CfsModel, x_bars: &[f64], epsilon: f64) -> Result<Vec<f64>> {
    if x_bars.len() != model.state_dim() {
        return Err(Error::Analysis(format!(
            "expected {} bounds, got {}",
            model.state_dim(),
            x_bars.len()
        )));
    }
    if x_bars.iter().any(|x| !(*x > 0.0) || !x.is_finite()) || !(epsilon >= 0.0) {
        return Err(Error::Analysis(
            "bounds must be positive and finite, epsilon >= 0".into(),
        ));
    }
    let mut gammas: Vec<f64> = model
        .blocks()
        .iter()
        .zip(x_bars)
        .map(|(b, &xb)| {
            max_secant_ratio(
                &b.f,
                &b.g,
                IntervalBound {
                    lo: 0.0,
                    hi: xb + epsilon,
                },
            )
        })
        .collect();
    let last = model.blocks().last().expect("model has a dynamic block");
    let y_hi = last.g.value(x_bars[x_bars.len() - 1] + epsilon);
    gammas.push(max_derivative(model.feedback(), IntervalBound { lo: 0.0, hi: y_hi }));
    Ok(gammas)
}

/// iOFP gain of the chain: `−1/γ₁ + γ₂⋯γₙ`, optionally with the secant
/// factor `cosⁿ(π/n)` on the product.
pub fn iofp_gain(gammas: &[f64], include_secant_factor: bool) -> Result<f64> {
    let n = gammas.len();
    if n < 2 {
        return Err(Error::Analysis("need at least two gains".into()));
    }
    if !(gammas[0] > 0.0) {
        return Err(Error::Analysis(format!(
            "leading gain must be positive, got {}",
            gammas[0]
        )));
    }
    let mut product = 1.0;
    for (i, &g) in gammas.iter().enumerate().skip(1) {
        if g.is_infinite() {
            return Err(Error::InfiniteGain { block: i + 1 });
        }
        if !(g > 0.0) {
            return Err(Error::Analysis(format!("gain {} must be positive, got {g}", i + 1)));
        }
        product *= g;
    }
    if include_secant_factor {
        product *= (std::f64::consts::PI / n as f64).cos().powi(n as i32);
    }
    let lead = if gammas[0].is_infinite() { 0.0 } else { -1.0 / gammas[0] };
    Ok(lead + product)
}

/// Gains and bounds backing the threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct GainReport {
    pub gammas: Vec<f64>,
    /// `−1/γ₁ + γ₂⋯γₙ` (infinite when some `γᵢ`, `i ≥ 2`, is).
    pub k_eps: f64,
    /// Same with the `cosⁿ(π/n)` factor.
    pub k_secant: f64,
    pub x_bars: Vec<f64>,
    /// `ȳ* = g₁(x̄₁)`.
    pub y_star: f64,
    pub epsilon: f64,
    /// `M = M₀ + Mₙ`.
    pub total_input: f64,
}

/// Default box inflation `1e-6·max(x̄ᵢ, 1)`.
pub fn default_epsilon(x_bars: &[f64]) -> f64 {
    1e-6 * x_bars.iter().copied().fold(1.0, f64::max)
}

pub fn gain_report(model: &CfsModel, m0: f64, epsilon: Option<f64>) -> Result<GainReport> {
    let x_bars = ultimate_bounds(model, m0)?;
    let epsilon = epsilon.unwrap_or_else(|| default_epsilon(&x_bars));
    let gammas = secant_gains(model, &x_bars, epsilon)?;
    let gain_or_inf = |flag| match iofp_gain(&gammas, flag) {
        Err(Error::InfiniteGain { .. }) => Ok(f64::INFINITY),
        other => other,
    };
    let k_eps = gain_or_inf(false)?;
    let k_secant = gain_or_inf(true)?;
    Ok(GainReport {
        y_star: model.output_y1(&x_bars),
        gammas,
        k_eps,
        k_secant,
        x_bars,
        epsilon,
        total_input: m0 + model.feedback_bound(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdResult {
    pub c_min: f64,
    pub lhs_at_c: f64,
    pub rhs: f64,
    pub converged: bool,
}

/// Left-hand side of the strength inequality, `c·ν(c·‖L‖·ȳ*)·λ₂`.
pub fn threshold_lhs(c: f64, lambda2: f64, l_norm: f64, y_star: f64, g0: &KineticFunction) -> f64 {
    if c <= 0.0 {
        return 0.0;
    }
    let nu = g0
        .derivative_inf_on_symmetric_interval(c * l_norm * y_star)
        .unwrap_or(f64::NAN);
    c * nu * lambda2
}

/// Smallest `c > 0` with `c·ν(c·‖L‖·ȳ*)·λ₂ > k`.
///
/// Brackets the first crossing on a log grid over `[1e-6, 1e9]` and bisects.
/// For a bounded `g₀` the left-hand side vanishes at both ends, so a crossing
/// exists only when `k` lies below its maximum.
pub fn min_coupling_gain(
    k: f64,
    lambda2: f64,
    l_norm: f64,
    y_star: f64,
    g0: &KineticFunction,
) -> Result<ThresholdResult> {
    if !k.is_finite() {
        return Err(Error::Analysis(format!("iOFP gain must be finite, got {k}")));
    }
    if k <= 0.0 {
        return Ok(ThresholdResult {
            c_min: 0.0,
            lhs_at_c: 0.0,
            rhs: k,
            converged: true,
        });
    }
    if !(lambda2 > 0.0) || !(y_star > 0.0) || !(l_norm > 0.0) {
        return Err(Error::Analysis(format!(
            "threshold needs lambda2 > 0, |L| > 0 and y* > 0 (got {lambda2}, {l_norm}, {y_star})"
        )));
    }
    let lhs = |c: f64| threshold_lhs(c, lambda2, l_norm, y_star, g0);
    let ln_lo = THRESHOLD_C_LO.ln();
    let ln_hi = THRESHOLD_C_HI.ln();
    let grid = |i: usize| (ln_lo + (ln_hi - ln_lo) * i as f64 / (THRESHOLD_GRID_POINTS - 1) as f64).exp();

    let mut bracket = None;
    let mut best = (THRESHOLD_C_LO, f64::NEG_INFINITY, 0usize);
    for i in 0..THRESHOLD_GRID_POINTS {
        let c = grid(i);
        let v = lhs(c);
        if v > best.1 {
            best = (c, v, i);
        }
        if v > k {
            let lo = if i == 0 { 0.0 } else { grid(i - 1) };
            bracket = Some((lo, c));
            break;
        }
    }

    let (mut lo, mut hi) = match bracket {
        Some(b) => b,
        None => {
            // the peak may fall between grid nodes
            let a = grid(best.2.saturating_sub(1)).ln();
            let b = grid((best.2 + 1).min(THRESHOLD_GRID_POINTS - 1)).ln();
            let (t, v) = maximize_on_interval(|t| lhs(t.exp()), IntervalBound { lo: a, hi: b });
            if v > k {
                (grid(best.2.saturating_sub(1)), t.exp())
            } else {
                return Err(Error::NoThreshold {
                    c_lo: THRESHOLD_C_LO,
                    c_hi: THRESHOLD_C_HI,
                    lhs_max: v.max(best.1),
                    c_at_max: t.exp(),
                    lhs_at_upper: lhs(THRESHOLD_C_HI),
                    rhs: k,
                });
            }
        }
    };

    let mut converged = false;
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi || hi - lo <= 1e-15 * hi {
            converged = true;
            break;
        }
        if lhs(mid) > k {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(ThresholdResult {
        c_min: hi,
        lhs_at_c: lhs(hi),
        rhs: k,
        converged,
    })
}

/// One scalar block `ẋ = −f(x) + u`, `y = g(x)` sampled on a time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockTrajectory {
    pub t: Vec<f64>,
    pub x: Vec<f64>,
    pub u: Vec<f64>,
    pub y: Vec<f64>,
}

/// Largest sampled value of `Ṡ − Δu·Δy + k·Δy²` along a pair of block
/// trajectories, with the quadratic storage `S(Δx) = (ε̂/2)·Δx²`,
/// `ε̂ = inf g′` over `interval`. `Ṡ` is taken by central differences, so
/// the first and last samples are skipped. Nonpositive means the dissipation
/// inequality holds at every sample.
pub fn iosp_inequality_check(
    g: &KineticFunction,
    a: &BlockTrajectory,
    b: &BlockTrajectory,
    k: f64,
    interval: IntervalBound,
) -> Result<f64> {
    if a.t.len() != b.t.len() || a.t.len() < 3 {
        return Err(Error::Analysis(
            "trajectory pair must share a grid of >= 3 samples".into(),
        ));
    }
    if a.t
        .iter()
        .zip(&b.t)
        .any(|(s, t)| (s - t).abs() > 1e-12 * (1.0 + s.abs()))
    {
        return Err(Error::Analysis("trajectory pair sampled on different grids".into()));
    }
    for (name, tr) in [("first", a), ("second", b)] {
        if let Some(x) = tr.x.iter().find(|x| !interval.contains(**x)) {
            return Err(Error::Analysis(format!(
                "{name} trajectory leaves [{}, {}] (x = {x})",
                interval.lo, interval.hi
            )));
        }
    }
    let eps_hat = min_derivative(g, interval);
    let storage: Vec<f64> =
        a.x.iter()
            .zip(&b.x)
            .map(|(p, q)| 0.5 * eps_hat * (p - q) * (p - q))
            .collect();
    let mut worst = f64::NEG_INFINITY;
    for i in 1..a.t.len() - 1 {
        let s_dot = (storage[i + 1] - storage[i - 1]) / (a.t[i + 1] - a.t[i - 1]);
        let du = a.u[i] - b.u[i];
        let dy = a.y[i] - b.y[i];
        worst = worst.max(s_dot - du * dy + k * dy * dy);
    }
    Ok(worst)
}

/// Sampled check that `0 ≤ g(u₁) − g(u₂) ≤ γ·(u₁ − u₂)` for `u₁ > u₂` in the interval.
pub fn static_block_check(g: &KineticFunction, interval: IntervalBound, gamma: f64) -> bool {
    let mut rng = ChaCha8Rng::seed_from_u64(0x005e_ca17);
    (0..STATIC_CHECK_PAIRS).all(|_| {
        let p = rng.gen_range(interval.lo..=interval.hi);
        let q = rng.gen_range(interval.lo..=interval.hi);
        let (u1, u2) = if p >= q { (p, q) } else { (q, p) };
        let dg = g.value(u1) - g.value(u2);
        let slack = 1e-12 * (1.0 + g.value(u1).abs());
        dg >= -slack && dg <= gamma * (u1 - u2) + slack
    })
}

/// Outcome of the full certificate pipeline for one scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisReport {
    pub n: usize,
    pub m0: f64,
    pub mn: f64,
    pub lambda2: Result<f64>,
    pub l_norm: f64,
    pub secant_factor: bool,
    /// Gains, or why the bound recursion failed.
    pub gains: Result<GainReport>,
    /// `None` when the gains are unavailable or no saturation map is configured.
    pub threshold: Option<Result<ThresholdResult>>,
    /// Coupling gain configured in the scenario, if any.
    pub coupling_gain: Option<f64>,
}

impl AnalysisReport {
    /// The iOFP gain used for the threshold.
    pub fn k(&self) -> Option<f64> {
        self.gains
            .as_ref()
            .ok()
            .map(|g| if self.secant_factor { g.k_secant } else { g.k_eps })
    }

    /// Whether the configured `c` satisfies the strength inequality.
    pub fn configured_gain_certified(&self, g0: &KineticFunction) -> Option<bool> {
        let c = self.coupling_gain?;
        let gains = self.gains.as_ref().ok()?;
        let lambda2 = *self.lambda2.as_ref().ok()?;
        let k = self.k()?;
        if k <= 0.0 {
            return Some(true);
        }
        Some(threshold_lhs(c, lambda2, self.l_norm, gains.y_star, g0) > k)
    }
}

/// Runs bounds → gains → iOFP gain → threshold for a network.
pub fn analyze(
    model: &CfsModel,
    graph: &CouplingGraph,
    g0: Option<&KineticFunction>,
    coupling_gain: Option<f64>,
    epsilon: Option<f64>,
    secant_factor: bool,
) -> AnalysisReport {
    let m0 = g0.map(|g| g.sup_value()).unwrap_or(0.0);
    let lambda2 = graph.lambda2();
    let l_norm = graph.laplacian_max_norm();
    let gains = gain_report(model, m0, epsilon);
    let threshold = match (&gains, g0, &lambda2) {
        (Ok(gr), Some(g0), Ok(l2)) => {
            let k = if secant_factor { gr.k_secant } else { gr.k_eps };
            Some(min_coupling_gain(k, *l2, l_norm, gr.y_star, g0))
        }
        (Ok(_), Some(_), Err(e)) => Some(Err(e.clone())),
        _ => None,
    };
    AnalysisReport {
        n: model.n(),
        m0,
        mn: model.feedback_bound(),
        lambda2,
        l_norm,
        secant_factor,
        gains,
        threshold,
        coupling_gain,
    }
}
