//! Certified bounds on the average edit distance constant `α_k` and the
//! Chvátal–Sankoff constant `γ_k` of two random strings over a `k`-letter
//! alphabet.
//!
//! The crate iterates a window transformation over all canonical pairs of
//! length-`h` strings in exact fixed-point arithmetic, proposes a growth rate
//! `r`, and emits a [`certify::Certificate`] that an independent integer-only
//! verifier accepts only if `T(v, v - r) <= v + r` (edit distance) or
//! `T(v, v - r) >= v + r` (LCS) holds component-wise. An accepted certificate
//! proves `α_k <= 2r` or `γ_k >= 2r`.
//!
//! Module map:
//!
//! * [`codec`]: packing of string pairs into base-`k` integers and
//!   canonicalization under alphabet permutations.
//! * [`fixedpoint`]: integer numerators over a shared scale with directed
//!   rounding.
//! * [`transform`]: the window transformation in binary, dense and sparse
//!   layouts.
//! * [`engine`]: the iteration, rate proposal and certificate assembly.
//! * [`certify`]: independent verification and certificate file formats.
//! * [`oracle`]: exact dynamic programs and exhaustive expectations used as
//!   ground truth.

pub mod certify;
pub mod codec;
pub mod engine;
pub mod error;
pub mod fixedpoint;
pub mod oracle;
pub mod transform;

use std::fmt;
use std::str::FromStr;

pub use certify::{read_certificate, verify, write_certificate, Bound, CertFormat, Certificate, Verdict};
pub use codec::{Alphabet, CanonicalIndex, CanonicalSpace, PairCode, Permutation};
pub use engine::{compute_bound, iterate, propose_rate, BoundReport, RateProposal, RunConfig};
pub use error::{Error, Result};
pub use fixedpoint::{FxScale, FxVector};
pub use transform::{Backend, PairRule, RuleKind, TransformPlan};

/// A letter of the alphabet, `0..k`.
pub type Letter = u32;

/// Which constant is being bounded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Problem {
    /// Upper bound on `α_k` (average edit distance).
    Edit,
    /// Lower bound on `γ_k` (average longest common subsequence).
    Lcs,
}

impl Problem {
    pub fn name(self) -> &'static str {
        match self {
            Problem::Edit => "edit",
            Problem::Lcs => "lcs",
        }
    }

    /// Tag used by the binary certificate format.
    pub fn tag(self) -> u8 {
        match self {
            Problem::Edit => 0,
            Problem::Lcs => 1,
        }
    }

    pub fn from_tag(tag: u8) -> Option<Problem> {
        match tag {
            0 => Some(Problem::Edit),
            1 => Some(Problem::Lcs),
            _ => None,
        }
    }
}

impl fmt::Display for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Problem {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "edit" => Ok(Problem::Edit),
            "lcs" => Ok(Problem::Lcs),
            other => Err(Error::InvalidInput(format!("unknown problem `{other}`"))),
        }
    }
}

/// Upper limit on the memory a run may allocate for vectors and plans.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MemoryBudget {
    bytes: u64,
}

impl MemoryBudget {
    pub const DEFAULT_GB: f64 = 8.0;
    pub const ENV_VAR: &'static str = "CERTBOUND_MEM_GB";

    pub fn from_bytes(bytes: u64) -> Self {
        MemoryBudget { bytes }
    }

    pub fn from_gb(gb: f64) -> Self {
        MemoryBudget {
            bytes: (gb.max(0.0) * 1e9) as u64,
        }
    }

    /// Budget from `CERTBOUND_MEM_GB` if set and parseable, else `default_gb`.
    pub fn from_env_or(default_gb: f64) -> Self {
        std::env::var(Self::ENV_VAR)
            .ok()
            .and_then(|v| v.trim().parse::<f64>().ok())
            .map(Self::from_gb)
            .unwrap_or_else(|| Self::from_gb(default_gb))
    }

    pub fn unlimited() -> Self {
        MemoryBudget { bytes: u64::MAX }
    }

    pub fn bytes(&self) -> u64 {
        self.bytes
    }

    pub(crate) fn check(&self, what: &str, required: u64) -> Result<()> {
        if required > self.bytes {
            Err(Error::Capacity {
                what: what.to_string(),
                required,
                budget: self.bytes,
            })
        } else {
            Ok(())
        }
    }
}

impl Default for MemoryBudget {
    fn default() -> Self {
        Self::from_env_or(Self::DEFAULT_GB)
    }
}
