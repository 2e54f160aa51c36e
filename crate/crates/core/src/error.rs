use thiserror::Error;

use crate::format::format_sig;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{function}: argument {x} outside domain [{lo}, {hi}]")]
    Domain {
        function: &'static str,
        x: f64,
        lo: f64,
        hi: f64,
    },

    #[error("{function}: value {y} outside range ({lo}, {hi})")]
    OutOfRange {
        function: &'static str,
        y: f64,
        lo: f64,
        hi: f64,
    },

    /// The inverse kinetic map needed at `block` (1-based) does not exist at `value`.
    #[error("{}", bound_undefined_message(*block, *value, *sup, *total_input))]
    BoundUndefined {
        block: usize,
        value: f64,
        sup: f64,
        total_input: f64,
    },

    #[error("secant gain of block {block} is infinite")]
    InfiniteGain { block: usize },

    #[error(
        "no coupling gain in [{c_lo}, {c_hi}] satisfies the threshold: max lhs {lhs_max} at c={c_at_max}, rhs {rhs}"
    )]
    NoThreshold {
        c_lo: f64,
        c_hi: f64,
        lhs_max: f64,
        c_at_max: f64,
        lhs_at_upper: f64,
        rhs: f64,
    },

    #[error("analysis: {0}")]
    Analysis(String),

    #[error("positivity violated at t={t}: oscillator {oscillator}, state {state} = {value} (try a smaller dt)")]
    PositivityViolation {
        t: f64,
        oscillator: usize,
        state: usize,
        value: f64,
    },

    #[error("non-finite state at t={t}")]
    Divergence { t: f64 },

    #[error("not oscillating: found {peaks} peaks, need at least 3")]
    NotOscillating { peaks: usize },

    #[error("invalid model: {0}")]
    Model(String),

    #[error("config: {0}")]
    Config(String),

    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

fn bound_undefined_message(block: usize, value: f64, sup: f64, total_input: f64) -> String {
    let sup = format_sig(sup, 10);
    if block == 1 {
        format!("h1 undefined (M={} > sup f1={sup})", format_sig(value, 10))
    } else {
        format!(
            "h{block} undefined (level {} reached from M={} exceeds sup f{block}={sup})",
            format_sig(value, 10),
            format_sig(total_input, 10)
        )
    }
}
