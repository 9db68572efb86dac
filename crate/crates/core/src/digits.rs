//! Base-`b` digit streams: the single high-precision observation `U_m`.

use num_bigint::BigUint;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAX_BASE: u32 = 36;

/// The first `m` base-`b` digits `D_1..D_m` of an observation in `[0, 1)`.
///
/// The value represented is `U_m = sum_t D_t b^-t`, a point on the grid
/// `{k b^-m : 0 <= k < b^m}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DigitStream {
    base: u32,
    digits: Vec<u8>,
}

impl DigitStream {
    pub fn new(base: u32, digits: Vec<u8>) -> Result<Self> {
        check_base(base)?;
        if digits.is_empty() {
            return Err(Error::Precision { min: 1, got: 0 });
        }
        if let Some((position, &d)) = digits.iter().enumerate().find(|(_, &d)| u32::from(d) >= base) {
            return Err(Error::InvalidDigit { digit: u32::from(d), position: position + 1, base });
        }
        Ok(DigitStream { base, digits })
    }

    /// Parses a decimal literal `0.d1d2...` (or `.d1d2...`, or `0`) as an exact
    /// value and returns its first `m` base-`b` digits, truncated.
    ///
    /// The literal is exact: digits beyond the last written one are zero, so a
    /// short literal such as `0.5` is valid for any `m`.
    pub fn from_decimal_str(text: &str, base: u32, m: usize) -> Result<Self> {
        check_base(base)?;
        if m == 0 {
            return Err(Error::Precision { min: 1, got: 0 });
        }
        let (numer, denom) = parse_unit_decimal(text)?;
        let b = BigUint::from(base);
        let mut rem = numer;
        let mut digits = Vec::with_capacity(m);
        for _ in 0..m {
            rem *= &b;
            let (q, r) = rem.div_rem(&denom);
            digits.push(q.to_u8().expect("quotient below base"));
            rem = r;
        }
        DigitStream::new(base, digits)
    }

    /// Reads digit characters (`0-9`, then `a-z` for bases above 10) directly.
    ///
    /// With `m = Some(k)` the first `k` digits are kept; fewer than `k` digits is
    /// an error because the missing tail is unknown.
    pub fn from_digit_text(text: &str, base: u32, m: Option<usize>) -> Result<Self> {
        check_base(base)?;
        let mut digits = Vec::with_capacity(text.len());
        for (i, ch) in text.trim().chars().enumerate() {
            if ch == '_' {
                continue;
            }
            let d = ch.to_digit(MAX_BASE).ok_or_else(|| Error::Parse {
                text: text.to_string(),
                reason: format!("character `{ch}` at offset {i} is not a digit"),
            })?;
            if d >= base {
                return Err(Error::Parse { text: text.to_string(), reason: format!("character `{ch}` at offset {i} is not a base-{base} digit") });
            }
            digits.push(d as u8);
        }
        if let Some(m) = m {
            if digits.len() < m {
                return Err(Error::Precision { min: m, got: digits.len() });
            }
            digits.truncate(m);
        }
        DigitStream::new(base, digits)
    }

    /// Digits of a binary floating-point value in `[0, 1)`.
    ///
    /// The conversion is exact for the `f64` given, but a decimal literal such
    /// as `0.3` is not representable, so digits at or beyond the 17th decimal
    /// place (and any digit whose grid cell boundary lies within one ulp) reflect
    /// the binary approximation rather than the intended number. Prefer
    /// [`DigitStream::from_decimal_str`].
    pub fn from_f64(x: f64, base: u32, m: usize) -> Result<Self> {
        if !(0.0..1.0).contains(&x) {
            return Err(Error::InvalidArgument(format!("{x} is outside [0, 1)")));
        }
        let r = BigRational::from_float(x).expect("finite");
        let numer = r.numer().to_biguint().expect("non-negative");
        let denom = r.denom().to_biguint().expect("positive");
        let b = BigUint::from(base);
        let mut rem = numer;
        let mut digits = Vec::with_capacity(m);
        for _ in 0..m {
            rem *= &b;
            let (q, r) = rem.div_rem(&denom);
            digits.push(q.to_u8().expect("quotient below base"));
            rem = r;
        }
        DigitStream::new(base, digits)
    }

    pub fn base(&self) -> u32 {
        self.base
    }

    /// Precision `m`.
    pub fn len(&self) -> usize {
        self.digits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.digits.is_empty()
    }

    pub fn digits(&self) -> &[u8] {
        &self.digits
    }

    /// Digit `D_t`, 1-based.
    pub fn digit(&self, t: usize) -> u8 {
        self.digits[t - 1]
    }

    /// The leading `m` digits as a new stream.
    pub fn prefix(&self, m: usize) -> Result<Self> {
        if m == 0 || m > self.len() {
            return Err(Error::IndexOutOfRange { name: "m", value: m, max: self.len() });
        }
        Ok(DigitStream { base: self.base, digits: self.digits[..m].to_vec() })
    }

    /// Exact value `U_m` as a rational with denominator `b^m` (before reduction).
    pub fn value(&self) -> BigRational {
        let b = BigUint::from(self.base);
        let mut numer = BigUint::zero();
        let mut denom = BigUint::one();
        for &d in &self.digits {
            numer = numer * &b + BigUint::from(d);
            denom *= &b;
        }
        BigRational::new(numer.into(), denom.into())
    }

    /// Scale-local values `b^{t-1} U_m mod 1 = 0.D_t D_{t+1} ... D_m` (base `b`)
    /// for `t = 1..m`, accumulated from the last digit so that entry `t`
    /// depends on `D_t..D_m` only.
    pub fn tails(&self) -> Vec<f64> {
        let b = f64::from(self.base);
        let mut out = vec![0.0; self.len()];
        let mut v = 0.0;
        for (slot, &d) in out.iter_mut().zip(&self.digits).rev() {
            v = (f64::from(d) + v) / b;
            *slot = v;
        }
        out
    }

    /// Digit histogram `N_0..N_{b-1}`.
    pub fn counts(&self) -> Vec<usize> {
        let mut counts = vec![0usize; self.base as usize];
        for &d in &self.digits {
            counts[d as usize] += 1;
        }
        counts
    }

    /// Digits rendered as text, e.g. `"0113"`.
    pub fn to_digit_string(&self) -> String {
        self.digits
            .iter()
            .map(|&d| std::char::from_digit(u32::from(d), MAX_BASE).expect("digit below base"))
            .collect()
    }
}

impl std::fmt::Display for DigitStream {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "0.{} (base {})", self.to_digit_string(), self.base)
    }
}

pub(crate) fn check_base(base: u32) -> Result<()> {
    if (2..=MAX_BASE).contains(&base) {
        Ok(())
    } else {
        Err(Error::InvalidBase(base))
    }
}

/// Parses `0.ddd`, `.ddd` or `0` into an exact fraction `numer / 10^k` in `[0, 1)`.
fn parse_unit_decimal(text: &str) -> Result<(BigUint, BigUint)> {
    let s = text.trim();
    let fail = |reason: &str| Error::Parse { text: text.to_string(), reason: reason.to_string() };
    let (int_part, frac_part) = match s.split_once('.') {
        Some((i, f)) => (i, f),
        None => (s, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(fail("no digits"));
    }
    if !int_part.chars().all(|c| c == '0') {
        return Err(fail("value must lie in [0, 1)"));
    }
    if let Some(c) = frac_part.chars().find(|c| !c.is_ascii_digit()) {
        return Err(fail(&format!("unexpected character `{c}`")));
    }
    let numer = if frac_part.is_empty() {
        BigUint::zero()
    } else {
        frac_part.parse::<BigUint>().map_err(|e| fail(&e.to_string()))?
    };
    let denom = BigUint::from(10u32).pow(frac_part.len() as u32);
    Ok((numer, denom))
}
