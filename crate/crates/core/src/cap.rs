//! Exact rational probability caps.
//!
//! The flow solvers need `Q * w` to be an exact integer, so caps are carried
//! as reduced fractions `a / b` rather than floats. Decimal strings such as
//! `0.5` parse to `1/2` without going through `f64`.

use std::fmt;
use std::str::FromStr;

use num_integer::Integer;
use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest denominator accepted for a cap.
pub const MAX_DENOMINATOR: u64 = 1_000_000;

/// A probability cap `Q = num / den` with `0 < Q <= 1` and `den <= MAX_DENOMINATOR`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Cap(Ratio<u64>);

impl Cap {
    pub fn new(num: u64, den: u64) -> Result<Self> {
        if den == 0 || num == 0 || num > den {
            return Err(Error::InvalidCap(format!("{num}/{den}")));
        }
        let r = Ratio::new(num, den);
        if *r.denom() > MAX_DENOMINATOR {
            return Err(Error::IrrationalCap(format!("{num}/{den}"), MAX_DENOMINATOR));
        }
        Ok(Cap(r))
    }

    pub const ONE: Cap = Cap(Ratio::new_raw(1, 1));

    /// Best rational approximation of `q` with denominator at most
    /// `MAX_DENOMINATOR`; fails unless it reproduces `q` to 1e-15.
    pub fn from_f64(q: f64) -> Result<Self> {
        if !q.is_finite() || q <= 0.0 || q > 1.0 {
            return Err(Error::InvalidCap(q.to_string()));
        }
        let (num, den) = best_rational(q, MAX_DENOMINATOR);
        if (num as f64 / den as f64 - q).abs() > 1e-15 {
            return Err(Error::IrrationalCap(q.to_string(), MAX_DENOMINATOR));
        }
        Cap::new(num, den)
    }

    pub fn numer(&self) -> u64 {
        *self.0.numer()
    }

    pub fn denom(&self) -> u64 {
        *self.0.denom()
    }

    pub fn as_f64(&self) -> f64 {
        self.numer() as f64 / self.denom() as f64
    }

    /// `floor(Q * w)`.
    pub fn units_at(&self, w: u64) -> u64 {
        (self.numer() as u128 * w as u128 / self.denom() as u128) as u64
    }

    /// `min(self + delta, 1)`.
    pub fn saturating_add(&self, delta: Ratio<u64>) -> Cap {
        let sum = self.0 + delta;
        if sum >= Ratio::from_integer(1) {
            Cap::ONE
        } else {
            Cap::new(*sum.numer(), *sum.denom()).unwrap_or(Cap::ONE)
        }
    }

    pub fn ratio(&self) -> Ratio<u64> {
        self.0
    }
}

impl fmt::Display for Cap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.denom() == 1 {
            write!(f, "{}", self.numer())
        } else {
            write!(f, "{}/{}", self.numer(), self.denom())
        }
    }
}

impl FromStr for Cap {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let r = parse_ratio(s)?;
        Cap::new(*r.numer(), *r.denom())
    }
}

impl TryFrom<String> for Cap {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Cap> for String {
    fn from(c: Cap) -> String {
        c.to_string()
    }
}

/// Parses `"a/b"`, an integer, or a plain decimal (`"0.125"`) into an exact
/// nonnegative fraction. Exponents are not accepted.
pub fn parse_ratio(s: &str) -> Result<Ratio<u64>> {
    let s = s.trim();
    let bad = || Error::InvalidCap(s.to_string());
    if let Some((n, d)) = s.split_once('/') {
        let n: u64 = n.trim().parse().map_err(|_| bad())?;
        let d: u64 = d.trim().parse().map_err(|_| bad())?;
        if d == 0 {
            return Err(bad());
        }
        return Ok(Ratio::new(n, d));
    }
    let (int, frac) = s.split_once('.').unwrap_or((s, ""));
    if int.is_empty() && frac.is_empty() {
        return Err(bad());
    }
    if !int.chars().all(|c| c.is_ascii_digit()) || !frac.chars().all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let frac = frac.trim_end_matches('0');
    if frac.len() > 18 {
        return Err(Error::IrrationalCap(s.to_string(), MAX_DENOMINATOR));
    }
    let den = 10u64.pow(frac.len() as u32);
    let int: u64 = if int.is_empty() { 0 } else { int.parse().map_err(|_| bad())? };
    let fnum: u64 = if frac.is_empty() { 0 } else { frac.parse().map_err(|_| bad())? };
    let num = int
        .checked_mul(den)
        .and_then(|v| v.checked_add(fnum))
        .ok_or_else(bad)?;
    Ok(Ratio::new(num, den))
}

/// Continued-fraction best approximation with bounded denominator.
fn best_rational(x: f64, max_den: u64) -> (u64, u64) {
    let (mut p0, mut q0, mut p1, mut q1) = (0u64, 1u64, 1u64, 0u64);
    let mut v = x;
    loop {
        let a = v.floor();
        let ai = a as u64;
        let p2 = ai.saturating_mul(p1).saturating_add(p0);
        let q2 = ai.saturating_mul(q1).saturating_add(q0);
        if q2 > max_den {
            break;
        }
        (p0, q0, p1, q1) = (p1, q1, p2, q2);
        let rem = v - a;
        if rem < 1e-15 || (p1 as f64 / q1 as f64 - x).abs() < 1e-15 {
            break;
        }
        v = 1.0 / rem;
    }
    let g = p1.gcd(&q1).max(1);
    (p1 / g, q1 / g)
}
