//! Exact and log-domain scalar primitives.
//!
//! Exact counts are [`BigCount`] (arbitrary-precision unsigned integers) and
//! ensemble averages are [`ExactRatio`] (big rationals in lowest terms). The
//! log domain uses [`LogValue`], a natural logarithm with `-inf` standing for
//! an exact zero.

use std::cmp::Ordering;
use std::fmt;
use std::sync::RwLock;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

pub type BigCount = BigUint;
pub type ExactRatio = BigRational;

/// Tolerance outside `[0, 1]` that [`binary_entropy`] clamps instead of rejecting.
pub const ENTROPY_CLAMP: f64 = 1e-12;

/// Natural logarithm of a nonnegative quantity. `NEG_INFINITY` encodes zero.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct LogValue(f64);

impl LogValue {
    pub const ZERO: LogValue = LogValue(f64::NEG_INFINITY);
    pub const ONE: LogValue = LogValue(0.0);

    pub fn from_ln(ln_value: f64) -> Self {
        debug_assert!(!ln_value.is_nan());
        LogValue(ln_value)
    }

    pub fn ln(self) -> f64 {
        self.0
    }

    pub fn is_zero(self) -> bool {
        self.0 == f64::NEG_INFINITY
    }

    pub fn exp(self) -> f64 {
        self.0.exp()
    }

    pub fn from_count(count: &BigUint) -> Self {
        LogValue(ln_biguint(count))
    }

    pub fn from_ratio(ratio: &ExactRatio) -> Self {
        if ratio.is_zero() {
            return LogValue::ZERO;
        }
        let num = ratio.numer().magnitude();
        let den = ratio.denom().magnitude();
        LogValue(ln_biguint(num) - ln_biguint(den))
    }

    pub fn mul(self, other: LogValue) -> LogValue {
        if self.is_zero() || other.is_zero() {
            LogValue::ZERO
        } else {
            LogValue(self.0 + other.0)
        }
    }

    /// Quotient; the divisor must be nonzero.
    pub fn div(self, other: LogValue) -> LogValue {
        debug_assert!(!other.is_zero());
        if self.is_zero() {
            LogValue::ZERO
        } else {
            LogValue(self.0 - other.0)
        }
    }

    /// ln(e^a + e^b) against the larger operand.
    pub fn add(self, other: LogValue) -> LogValue {
        let (hi, lo) = if self.0 >= other.0 {
            (self, other)
        } else {
            (other, self)
        };
        if lo.is_zero() {
            return hi;
        }
        LogValue(hi.0 + (lo.0 - hi.0).exp().ln_1p())
    }
}

impl fmt::Display for LogValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            write!(f, "-inf")
        } else {
            write!(f, "{}", self.0)
        }
    }
}

/// ln of an arbitrary-precision integer, `-inf` for zero.
pub fn ln_biguint(x: &BigUint) -> f64 {
    if x.is_zero() {
        return f64::NEG_INFINITY;
    }
    let bits = x.bits();
    if bits <= 1000 {
        x.to_f64().expect("fits in f64").ln()
    } else {
        let shift = bits - 64;
        let top = (x >> shift).to_f64().expect("64-bit prefix");
        top.ln() + shift as f64 * std::f64::consts::LN_2
    }
}

static FACTORIALS: RwLock<Vec<BigUint>> = RwLock::new(Vec::new());

fn with_factorials<R>(n: usize, f: impl FnOnce(&[BigUint]) -> R) -> R {
    {
        let table = FACTORIALS.read().expect("factorial table poisoned");
        if table.len() > n {
            return f(&table);
        }
    }
    let mut table = FACTORIALS.write().expect("factorial table poisoned");
    if table.is_empty() {
        table.push(BigUint::one());
    }
    while table.len() <= n {
        let next = table.last().unwrap() * BigUint::from(table.len());
        table.push(next);
    }
    f(&table)
}

/// C(n, k), zero whenever `k < 0`, `k > n` or `n < 0`.
pub fn binomial(n: i64, k: i64) -> BigCount {
    if n < 0 || k < 0 || k > n {
        return BigUint::zero();
    }
    let (n, k) = (n as usize, k as usize);
    with_factorials(n, |fact| &fact[n] / (&fact[k] * &fact[n - k]))
}

/// ln C(n, k) via log-gamma, [`LogValue::ZERO`] out of range.
pub fn log_binomial(n: i64, k: i64) -> LogValue {
    if n < 0 || k < 0 || k > n {
        return LogValue::ZERO;
    }
    if k == 0 || k == n {
        return LogValue::ONE;
    }
    let (n, k) = (n as f64, k as f64);
    LogValue(ln_gamma(n + 1.0) - ln_gamma(k + 1.0) - ln_gamma(n - k + 1.0))
}

/// Dense Pascal triangle for the inner loops of the enumerators.
///
/// Lookups share the out-of-range convention of [`binomial`].
pub struct BinomialTable {
    rows: Vec<Vec<BigUint>>,
    zero: BigUint,
}

impl BinomialTable {
    pub fn new(n_max: usize) -> Self {
        let mut rows: Vec<Vec<BigUint>> = Vec::with_capacity(n_max + 1);
        rows.push(vec![BigUint::one()]);
        for n in 1..=n_max {
            let prev = &rows[n - 1];
            let mut row = Vec::with_capacity(n + 1);
            row.push(BigUint::one());
            for k in 1..n {
                row.push(&prev[k - 1] + &prev[k]);
            }
            row.push(BigUint::one());
            rows.push(row);
        }
        BinomialTable {
            rows,
            zero: BigUint::zero(),
        }
    }

    pub fn n_max(&self) -> usize {
        self.rows.len() - 1
    }

    pub fn get(&self, n: i64, k: i64) -> &BigUint {
        if n < 0 || k < 0 || k > n {
            return &self.zero;
        }
        &self.rows[n as usize][k as usize]
    }
}

/// Binary entropy in nats, with `H(0) = H(1) = 0`.
pub fn binary_entropy(x: f64) -> Result<f64> {
    if x.is_nan() || x < -ENTROPY_CLAMP || x > 1.0 + ENTROPY_CLAMP {
        return Err(Error::Domain(format!(
            "binary entropy argument {x} outside [0, 1]"
        )));
    }
    let x = x.clamp(0.0, 1.0);
    if x == 0.0 || x == 1.0 {
        return Ok(0.0);
    }
    Ok(-x * x.ln() - (1.0 - x) * (-x).ln_1p())
}

/// ln Σ exp(term), accumulated in the given order against the running maximum.
pub fn log_sum_exp(terms: &[LogValue]) -> LogValue {
    let mut max = f64::NEG_INFINITY;
    let mut scaled = 0.0f64;
    for t in terms {
        if t.is_zero() {
            continue;
        }
        if t.0 > max {
            scaled = scaled * (max - t.0).exp() + 1.0;
            max = t.0;
        } else {
            scaled += (t.0 - max).exp();
        }
    }
    if max == f64::NEG_INFINITY {
        LogValue::ZERO
    } else {
        LogValue(max + scaled.ln())
    }
}

pub fn ratio_from_count(count: BigUint) -> ExactRatio {
    BigRational::from_integer(BigInt::from(count))
}

/// Compares two log values by magnitude; `ZERO` sorts first.
pub fn cmp_log(a: LogValue, b: LogValue) -> Ordering {
    a.0.partial_cmp(&b.0).unwrap_or(Ordering::Equal)
}
