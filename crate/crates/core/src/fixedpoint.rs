//! Fixed-point values `a / p` stored as signed integer numerators over a
//! shared scale, with directed rounding for averages.
//!
//! Edit-distance runs round averages up and LCS runs round them down, so the
//! computed transformation always errs on the side of the bound being
//! certified.

use crate::{Error, Problem, Result};

/// Grid denominator `p` and the slack numerator of `ε = eps_num / p`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FxScale {
    p: i64,
    eps_num: i64,
}

impl FxScale {
    pub const DEFAULT_P: i64 = 100_000;
    pub const DEFAULT_EPS_NUM: i64 = 5;

    pub fn new(p: i64, eps_num: i64) -> Result<FxScale> {
        if p < 1 {
            return Err(Error::InvalidConfig(format!("scale must be positive, got {p}")));
        }
        if eps_num < 0 {
            return Err(Error::InvalidConfig(format!(
                "epsilon numerator must be non-negative, got {eps_num}"
            )));
        }
        Ok(FxScale { p, eps_num })
    }

    pub fn p(&self) -> i64 {
        self.p
    }

    pub fn eps_num(&self) -> i64 {
        self.eps_num
    }
}

impl Default for FxScale {
    fn default() -> Self {
        FxScale {
            p: Self::DEFAULT_P,
            eps_num: Self::DEFAULT_EPS_NUM,
        }
    }
}

/// Rounding direction for averages.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rounding {
    Up,
    Down,
}

impl Problem {
    /// Edit distance is bounded from above, LCS from below.
    pub fn rounding(self) -> Rounding {
        match self {
            Problem::Edit => Rounding::Up,
            Problem::Lcs => Rounding::Down,
        }
    }
}

/// `⌊n / d⌋` for `d > 0`.
#[inline]
pub fn div_floor(n: i64, d: i64) -> i64 {
    debug_assert!(d > 0);
    n.div_euclid(d)
}

/// `⌈n / d⌉` for `d > 0`.
#[inline]
pub fn div_ceil(n: i64, d: i64) -> i64 {
    debug_assert!(d > 0);
    let q = n.div_euclid(d);
    if n.rem_euclid(d) == 0 {
        q
    } else {
        q + 1
    }
}

#[inline]
pub fn div_round(n: i64, d: i64, rounding: Rounding) -> i64 {
    match rounding {
        Rounding::Up => div_ceil(n, d),
        Rounding::Down => div_floor(n, d),
    }
}

fn checked_sum(numerators: &[i64]) -> Result<i64> {
    numerators.iter().try_fold(0i64, |acc, &x| {
        acc.checked_add(x)
            .ok_or_else(|| Error::Overflow("sum of numerators exceeds 64 bits".into()))
    })
}

fn check_divisor(divisor: i64) -> Result<()> {
    if divisor <= 0 {
        Err(Error::InvalidInput(format!("divisor must be positive, got {divisor}")))
    } else {
        Ok(())
    }
}

/// `⌈Σ numerators / divisor⌉`.
pub fn avg_round_up(numerators: &[i64], divisor: i64) -> Result<i64> {
    check_divisor(divisor)?;
    Ok(div_ceil(checked_sum(numerators)?, divisor))
}

/// `⌊Σ numerators / divisor⌋`, rounding toward negative infinity.
pub fn avg_round_down(numerators: &[i64], divisor: i64) -> Result<i64> {
    check_divisor(divisor)?;
    Ok(div_floor(checked_sum(numerators)?, divisor))
}

/// One numerator per canonical class, all over the same scale.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FxVector {
    scale: FxScale,
    values: Vec<i64>,
}

impl FxVector {
    pub fn new(scale: FxScale, values: Vec<i64>) -> FxVector {
        FxVector { scale, values }
    }

    pub fn zeros(scale: FxScale, len: usize) -> FxVector {
        FxVector {
            scale,
            values: vec![0; len],
        }
    }

    pub fn scale(&self) -> FxScale {
        self.scale
    }

    pub fn values(&self) -> &[i64] {
        &self.values
    }

    pub(crate) fn set_scale(&mut self, scale: FxScale) {
        self.scale = scale;
    }

    pub fn values_mut(&mut self) -> &mut [i64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<i64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Largest absolute numerator, 0 for an empty vector.
    pub fn max_abs(&self) -> u64 {
        self.values.iter().map(|v| v.unsigned_abs()).max().unwrap_or(0)
    }
}

/// Adds `r_num` to every numerator.
pub fn shift(vec: &FxVector, r_num: i64) -> Result<FxVector> {
    let values = vec
        .values
        .iter()
        .map(|&v| {
            v.checked_add(r_num)
                .ok_or_else(|| Error::Overflow(format!("shifting {v} by {r_num}")))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FxVector::new(vec.scale, values))
}
