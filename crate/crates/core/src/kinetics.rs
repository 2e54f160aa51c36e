//! Scalar monotone kinetic maps.
//!
//! Every reaction rate, output map, feedback nonlinearity and coupling
//! saturation used in the oscillator models is a [`KineticFunction`]. All
//! variants are strictly increasing on their domain; the Hill variant carries
//! a leading minus sign so that the repressive feedback is increasing with
//! values in `[-v1, 0)`.
//!
//! Units follow the circadian model: concentrations in nM, rates in nM/h,
//! time in hours. No conversions are performed.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Closed interval `[lo, hi]`; `hi` may be `f64::INFINITY`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntervalBound {
    pub lo: f64,
    pub hi: f64,
}

impl IntervalBound {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if lo.is_nan() || hi.is_nan() || lo > hi {
            return Err(Error::Analysis(format!("invalid interval [{lo}, {hi}]")));
        }
        Ok(Self { lo, hi })
    }

    /// The state box `[0, x_bar]`.
    pub fn upto(hi: f64) -> Result<Self> {
        Self::new(0.0, hi)
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo && x <= self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

/// Image of a kinetic function over its domain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValueRange {
    pub lo: f64,
    pub hi: f64,
    /// Whether `lo` is attained (at the left end of a closed domain).
    pub lo_attained: bool,
}

impl ValueRange {
    fn admits(&self, y: f64) -> bool {
        let above = if self.lo_attained { y >= self.lo } else { y > self.lo };
        above && y < self.hi
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum KineticFunction {
    /// `x ↦ slope·x`
    Linear { slope: f64 },
    /// `x ↦ x`
    Identity,
    /// `x ↦ vmax·x/(k + x)`
    MichaelisMenten { vmax: f64, k: f64 },
    /// `z ↦ −v1·k1ᵖ/(k1ᵖ + zᵖ)`
    HillInhibition { v1: f64, k1: f64, p: f64 },
    /// `v ↦ (m0/2)·(1 + sign(v)·|v|^ρ/(1 + |v|^ρ))`, a bounded increasing map onto `(0, m0)`.
    SaturatingCoupling {
        #[serde(alias = "M0")]
        m0: f64,
        rho: f64,
    },
    /// `x ↦ slope·x + offset`
    Affine { slope: f64, offset: f64 },
}

const BISECTION_MAX_ITER: usize = 200;
const NU_GRID_POINTS: usize = 10_000;

impl KineticFunction {
    pub fn linear(slope: f64) -> Result<Self> {
        Self::Linear { slope }.validated()
    }

    pub fn michaelis_menten(vmax: f64, k: f64) -> Result<Self> {
        Self::MichaelisMenten { vmax, k }.validated()
    }

    pub fn hill_inhibition(v1: f64, k1: f64, p: f64) -> Result<Self> {
        Self::HillInhibition { v1, k1, p }.validated()
    }

    pub fn saturating_coupling(m0: f64, rho: f64) -> Result<Self> {
        Self::SaturatingCoupling { m0, rho }.validated()
    }

    pub fn affine(slope: f64, offset: f64) -> Result<Self> {
        Self::Affine { slope, offset }.validated()
    }

    /// Checks the parameter constraints that make the map strictly increasing.
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::Model(format!(
                    "{}: {name} must be positive and finite, got {v}",
                    self.name()
                )))
            }
        };
        match *self {
            Self::Linear { slope } => positive("slope", slope),
            Self::Identity => Ok(()),
            Self::MichaelisMenten { vmax, k } => {
                positive("vmax", vmax)?;
                positive("k", k)
            }
            Self::HillInhibition { v1, k1, p } => {
                positive("v1", v1)?;
                positive("k1", k1)?;
                if p >= 1.0 && p.is_finite() {
                    Ok(())
                } else {
                    Err(Error::Model(format!(
                        "hill_inhibition: exponent p must be >= 1, got {p}"
                    )))
                }
            }
            Self::SaturatingCoupling { m0, rho } => {
                positive("m0", m0)?;
                if rho > 0.0 && rho < 1.0 {
                    Ok(())
                } else {
                    Err(Error::Model(format!(
                        "saturating_coupling: rho must lie in (0, 1), got {rho}"
                    )))
                }
            }
            Self::Affine { slope, offset } => {
                positive("slope", slope)?;
                if offset.is_finite() {
                    Ok(())
                } else {
                    Err(Error::Model("affine: offset must be finite".into()))
                }
            }
        }
    }

    fn validated(self) -> Result<Self> {
        self.validate()?;
        Ok(self)
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Linear { .. } => "linear",
            Self::Identity => "identity",
            Self::MichaelisMenten { .. } => "michaelis_menten",
            Self::HillInhibition { .. } => "hill_inhibition",
            Self::SaturatingCoupling { .. } => "saturating_coupling",
            Self::Affine { .. } => "affine",
        }
    }

    pub fn domain(&self) -> IntervalBound {
        match self {
            Self::SaturatingCoupling { .. } | Self::Affine { .. } => IntervalBound {
                lo: f64::NEG_INFINITY,
                hi: f64::INFINITY,
            },
            _ => IntervalBound {
                lo: 0.0,
                hi: f64::INFINITY,
            },
        }
    }

    fn check_domain(&self, x: f64) -> Result<()> {
        let d = self.domain();
        if x.is_nan() || !d.contains(x) {
            return Err(Error::Domain {
                function: self.name(),
                x,
                lo: d.lo,
                hi: d.hi,
            });
        }
        Ok(())
    }

    /// Evaluates the map, rejecting arguments outside the domain.
    pub fn eval(&self, x: f64) -> Result<f64> {
        self.check_domain(x)?;
        Ok(self.value(x))
    }

    /// Evaluates the closed form without a domain check.
    ///
    /// Used in the integrators, where intermediate Runge-Kutta stages may sit a
    /// rounding error below zero. The Hill variant treats negative arguments as 0.
    #[inline]
    pub fn value(&self, x: f64) -> f64 {
        match *self {
            Self::Linear { slope } => slope * x,
            Self::Identity => x,
            Self::MichaelisMenten { vmax, k } => vmax * x / (k + x),
            Self::HillInhibition { v1, k1, p } => {
                let kp = k1.powf(p);
                -v1 * kp / (kp + x.max(0.0).powf(p))
            }
            Self::SaturatingCoupling { m0, rho } => {
                let a = x.abs().powf(rho);
                0.5 * m0 * (1.0 + x.signum() * a / (1.0 + a))
            }
            Self::Affine { slope, offset } => slope * x + offset,
        }
    }

    /// Exact derivative. Returns `f64::INFINITY` where the one-sided
    /// derivative diverges (saturating coupling at 0).
    pub fn derivative(&self, x: f64) -> Result<f64> {
        self.check_domain(x)?;
        Ok(self.derivative_value(x))
    }

    pub(crate) fn derivative_value(&self, x: f64) -> f64 {
        match *self {
            Self::Linear { slope } | Self::Affine { slope, .. } => slope,
            Self::Identity => 1.0,
            Self::MichaelisMenten { vmax, k } => vmax * k / ((k + x) * (k + x)),
            Self::HillInhibition { v1, k1, p } => {
                let x = x.max(0.0);
                let kp = k1.powf(p);
                let d = kp + x.powf(p);
                v1 * kp * p * x.powf(p - 1.0) / (d * d)
            }
            Self::SaturatingCoupling { m0, rho } => {
                if x == 0.0 {
                    return f64::INFINITY;
                }
                let ax = x.abs();
                let a = ax.powf(rho);
                0.5 * m0 * rho * ax.powf(rho - 1.0) / ((1.0 + a) * (1.0 + a))
            }
        }
    }

    /// Image of the domain.
    pub fn range(&self) -> ValueRange {
        match *self {
            Self::Linear { .. } | Self::Identity => ValueRange {
                lo: 0.0,
                hi: f64::INFINITY,
                lo_attained: true,
            },
            Self::MichaelisMenten { vmax, .. } => ValueRange {
                lo: 0.0,
                hi: vmax,
                lo_attained: true,
            },
            Self::HillInhibition { v1, .. } => ValueRange {
                lo: -v1,
                hi: 0.0,
                lo_attained: true,
            },
            Self::SaturatingCoupling { m0, .. } => ValueRange {
                lo: 0.0,
                hi: m0,
                lo_attained: false,
            },
            Self::Affine { .. } => ValueRange {
                lo: f64::NEG_INFINITY,
                hi: f64::INFINITY,
                lo_attained: false,
            },
        }
    }

    /// Supremum over the domain (`f64::INFINITY` if unbounded).
    pub fn sup_value(&self) -> f64 {
        self.range().hi
    }

    /// Infimum over the domain. For the Hill feedback this is `-Mₙ`.
    pub fn inf_value(&self) -> f64 {
        self.range().lo
    }

    /// Partial inverse: the unique `x` in the domain with `f(x) = y`.
    pub fn inverse(&self, y: f64) -> Result<f64> {
        let r = self.range();
        if y.is_nan() || !r.admits(y) {
            return Err(Error::OutOfRange {
                function: self.name(),
                y,
                lo: r.lo,
                hi: r.hi,
            });
        }
        Ok(match *self {
            Self::Linear { slope } => y / slope,
            Self::Identity => y,
            Self::MichaelisMenten { vmax, k } => k * y / (vmax - y),
            Self::HillInhibition { v1, k1, p } => {
                let kp = k1.powf(p);
                (kp * (-v1 / y - 1.0)).max(0.0).powf(1.0 / p)
            }
            Self::Affine { slope, offset } => (y - offset) / slope,
            Self::SaturatingCoupling { .. } => self.bisect_inverse(y),
        })
    }

    /// Inverse by bracket expansion and bisection; `y` is known to be in range.
    fn bisect_inverse(&self, y: f64) -> f64 {
        let (mut lo, mut hi) = (-1.0_f64, 1.0_f64);
        let mut iter = 0;
        while self.value(lo) > y && iter < BISECTION_MAX_ITER {
            hi = lo;
            lo *= 2.0;
            iter += 1;
        }
        while self.value(hi) < y && iter < BISECTION_MAX_ITER {
            lo = hi;
            hi *= 2.0;
            iter += 1;
        }
        while iter < BISECTION_MAX_ITER {
            let mid = 0.5 * (lo + hi);
            if mid == lo || mid == hi {
                break;
            }
            if self.value(mid) < y {
                lo = mid;
            } else {
                hi = mid;
            }
            iter += 1;
        }
        0.5 * (lo + hi)
    }

    /// `ν(s) = inf_{|v| ≤ s} f′(v)`.
    ///
    /// For the saturating coupling the derivative is even and decreasing in
    /// `|v|`, so `ν(s) = f′(s)` for `s > 0` and `ν(0) = ∞`. Other variants fall
    /// back to a grid minimum over `[-s, s]` intersected with the domain.
    pub fn derivative_inf_on_symmetric_interval(&self, s: f64) -> Result<f64> {
        if !(s >= 0.0) {
            return Err(Error::Domain {
                function: "nu",
                x: s,
                lo: 0.0,
                hi: f64::INFINITY,
            });
        }
        if let Self::SaturatingCoupling { .. } = self {
            return Ok(self.derivative_value(s));
        }
        let d = self.domain();
        let lo = (-s).max(d.lo);
        let hi = s;
        if hi < lo {
            return Err(Error::Domain {
                function: self.name(),
                x: s,
                lo: d.lo,
                hi: d.hi,
            });
        }
        let mut best = self.derivative_value(lo).min(self.derivative_value(hi));
        for i in 0..=NU_GRID_POINTS {
            let v = lo + (hi - lo) * i as f64 / NU_GRID_POINTS as f64;
            best = best.min(self.derivative_value(v));
        }
        Ok(best)
    }
}
