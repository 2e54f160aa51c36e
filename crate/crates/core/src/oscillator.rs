//! Goodwin-type cyclic feedback oscillators.
//!
//! A model is a chain of `n - 1` dynamic blocks
//!
//! ```text
//! ẋ₁ = −f₁(x₁) + u_ext − yₙ,      y₁ = g₁(x₁)
//! ẋᵢ = −fᵢ(xᵢ) + yᵢ₋₁,             yᵢ = gᵢ(xᵢ)     (2 ≤ i ≤ n−1)
//! yₙ = gₙ(yₙ₋₁)
//! ```
//!
//! closed by a static repressive block `gₙ` with values in `[−Mₙ, 0]`. The
//! static block is folded into the first equation; `yₙ` is available through
//! [`CfsModel::output_yn`].

use serde::{Deserialize, Serialize};

use crate::analysis::phi_diverges;
use crate::error::{Error, Result};
use crate::kinetics::KineticFunction;

/// One reaction: degradation `f` and output map `g`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Block {
    pub f: KineticFunction,
    pub g: KineticFunction,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CfsModel {
    blocks: Vec<Block>,
    feedback: KineticFunction,
}

/// Concentrations `x₁ … xₙ₋₁` of one oscillator.
#[derive(Debug, Clone, PartialEq)]
pub struct OscillatorState(pub Vec<f64>);

impl OscillatorState {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

fn maps_nonnegative_to_nonnegative(f: &KineticFunction) -> bool {
    match f {
        KineticFunction::Linear { .. } | KineticFunction::Identity | KineticFunction::MichaelisMenten { .. } => true,
        KineticFunction::Affine { offset, .. } => *offset >= 0.0,
        _ => false,
    }
}

impl CfsModel {
    pub fn new(blocks: Vec<Block>, feedback: KineticFunction) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::Model("need at least one dynamic block (n >= 2)".into()));
        }
        for (i, b) in blocks.iter().enumerate() {
            let idx = i + 1;
            b.f.validate()?;
            b.g.validate()?;
            if !maps_nonnegative_to_nonnegative(&b.f) || !maps_nonnegative_to_nonnegative(&b.g) {
                return Err(Error::Model(format!(
                    "block {idx}: f and g must map [0, inf) into [0, inf) (got f={}, g={})",
                    b.f.name(),
                    b.g.name()
                )));
            }
            if !phi_diverges(&b.f) {
                return Err(Error::Model(format!(
                    "block {idx}: f{idx} violates the barrier condition (integral of 1/f must diverge at 0 and at infinity)"
                )));
            }
        }
        feedback.validate()?;
        let range = feedback.range();
        if !matches!(feedback, KineticFunction::HillInhibition { .. }) || range.hi > 0.0 || !range.lo.is_finite() {
            return Err(Error::Model(format!(
                "static block must be increasing with values in [-Mn, 0], got {}",
                feedback.name()
            )));
        }
        Ok(Self { blocks, feedback })
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn feedback(&self) -> &KineticFunction {
        &self.feedback
    }

    /// Block count `n`, including the static block.
    pub fn n(&self) -> usize {
        self.blocks.len() + 1
    }

    /// Number of state variables, `n − 1`.
    pub fn state_dim(&self) -> usize {
        self.blocks.len()
    }

    /// `Mₙ = −inf gₙ`.
    pub fn feedback_bound(&self) -> f64 {
        -self.feedback.inf_value()
    }

    /// Writes `ẋ` into `out`.
    #[inline]
    pub fn vector_field_into(&self, x: &[f64], u_ext: f64, out: &mut [f64]) {
        let m = self.blocks.len();
        let y_last = self.blocks[m - 1].g.value(x[m - 1]);
        let yn = self.feedback.value(y_last);
        out[0] = -self.blocks[0].f.value(x[0]) + u_ext - yn;
        for i in 1..m {
            out[i] = -self.blocks[i].f.value(x[i]) + self.blocks[i - 1].g.value(x[i - 1]);
        }
    }

    pub fn vector_field(&self, x: &OscillatorState, u_ext: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.state_dim()];
        self.vector_field_into(&x.0, u_ext, &mut out);
        out
    }

    /// `y₁ = g₁(x₁)`, the output used for coupling.
    #[inline]
    pub fn output_y1(&self, x: &[f64]) -> f64 {
        self.blocks[0].g.value(x[0])
    }

    /// `yₙ = gₙ(gₙ₋₁(xₙ₋₁)) ≤ 0`.
    pub fn output_yn(&self, x: &[f64]) -> f64 {
        let m = self.blocks.len();
        self.feedback.value(self.blocks[m - 1].g.value(x[m - 1]))
    }

    /// Block inputs `u₁ = u_ext − yₙ`, `uᵢ = yᵢ₋₁`.
    pub fn block_inputs(&self, x: &[f64], u_ext: f64) -> Vec<f64> {
        let mut u = Vec::with_capacity(self.blocks.len());
        u.push(u_ext - self.output_yn(x));
        for i in 1..self.blocks.len() {
            u.push(self.blocks[i - 1].g.value(x[i - 1]));
        }
        u
    }
}

/// Parameters of the three-variable circadian clock (mRNA X, protein Y,
/// inhibitor Z). Defaults give a free-running period close to 23.5 h.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GonzeParams {
    pub nu1: f64,
    #[serde(rename = "K1")]
    pub k1: f64,
    /// Hill exponent of the transcriptional repression.
    pub n: f64,
    pub nu2: f64,
    #[serde(rename = "K2")]
    pub k2: f64,
    pub k3: f64,
    pub nu4: f64,
    #[serde(rename = "K4")]
    pub k4: f64,
    pub k5: f64,
    pub nu6: f64,
    #[serde(rename = "K6")]
    pub k6: f64,
}

impl Default for GonzeParams {
    fn default() -> Self {
        Self {
            nu1: 0.7,
            k1: 1.0,
            n: 4.0,
            nu2: 0.35,
            k2: 1.0,
            k3: 0.7,
            nu4: 0.35,
            k4: 1.0,
            k5: 0.7,
            nu6: 0.35,
            k6: 1.0,
        }
    }
}

/// The circadian clock as a cyclic feedback system:
/// `f₁ = MM(ν₂, K₂)`, `g₁ = k₃·X`, `f₂ = MM(ν₄, K₄)`, `g₂ = k₅·Y`,
/// `f₃ = MM(ν₆, K₆)`, `g₃ = Z`, `gₙ = −ν₁K₁ⁿ/(K₁ⁿ + ·ⁿ)`.
pub fn gonze_model(p: &GonzeParams) -> Result<CfsModel> {
    let named = [
        ("nu1", p.nu1),
        ("K1", p.k1),
        ("n", p.n),
        ("nu2", p.nu2),
        ("K2", p.k2),
        ("k3", p.k3),
        ("nu4", p.nu4),
        ("K4", p.k4),
        ("k5", p.k5),
        ("nu6", p.nu6),
        ("K6", p.k6),
    ];
    for (name, v) in named {
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::Config(format!(
                "gonze parameter {name} must be positive, got {v}"
            )));
        }
    }
    let blocks = vec![
        Block {
            f: KineticFunction::michaelis_menten(p.nu2, p.k2)?,
            g: KineticFunction::linear(p.k3)?,
        },
        Block {
            f: KineticFunction::michaelis_menten(p.nu4, p.k4)?,
            g: KineticFunction::linear(p.k5)?,
        },
        Block {
            f: KineticFunction::michaelis_menten(p.nu6, p.k6)?,
            g: KineticFunction::Identity,
        },
    ];
    let feedback = KineticFunction::hill_inhibition(p.nu1, p.k1, p.n).map_err(|e| Error::Config(e.to_string()))?;
    CfsModel::new(blocks, feedback)
}

/// Goodwin chain with linear degradation and linear output maps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LinearGoodwinParams {
    /// Number of dynamic blocks (`n − 1`).
    pub stages: usize,
    /// Degradation rate of every stage.
    pub degradation: f64,
    /// Slope of `g₁ … gₙ₋₂`; the last dynamic output is the identity.
    pub gain: f64,
    pub hill_v1: f64,
    pub hill_k1: f64,
    pub hill_p: f64,
}

impl Default for LinearGoodwinParams {
    /// A chain whose iOFP gain is small and positive, so that a finite minimal
    /// coupling gain exists for a moderate saturation level.
    fn default() -> Self {
        Self {
            stages: 3,
            degradation: 1.0,
            gain: 1.0,
            hill_v1: 0.95,
            hill_k1: 1.0,
            hill_p: 4.0,
        }
    }
}

impl LinearGoodwinParams {
    /// Slow, steep chain that oscillates on its own.
    pub fn oscillating() -> Self {
        Self {
            stages: 3,
            degradation: 0.2,
            gain: 1.0,
            hill_v1: 1.0,
            hill_k1: 1.0,
            hill_p: 12.0,
        }
    }
}

pub fn linear_goodwin(p: &LinearGoodwinParams) -> Result<CfsModel> {
    if p.stages == 0 {
        return Err(Error::Config("linear goodwin: stages must be >= 1".into()));
    }
    let mut blocks = Vec::with_capacity(p.stages);
    for i in 0..p.stages {
        let g = if i + 1 == p.stages {
            KineticFunction::Identity
        } else {
            KineticFunction::linear(p.gain)?
        };
        blocks.push(Block {
            f: KineticFunction::linear(p.degradation)?,
            g,
        });
    }
    CfsModel::new(
        blocks,
        KineticFunction::hill_inhibition(p.hill_v1, p.hill_k1, p.hill_p)?,
    )
}
