//! Exact decimal fixed-point numbers `mag · 10^-scale` over big integers,
//! with truncating multiplication/division and series for `ln` and `exp`.

use std::cmp::Ordering;

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Extra digits carried inside transcendental evaluations.
const SERIES_GUARD: usize = 12;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BigFixed {
    mag: BigInt,
    scale: usize,
}

pub(crate) fn pow10(n: usize) -> BigInt {
    BigInt::from(10u32).pow(n as u32)
}

impl BigFixed {
    pub fn zero(scale: usize) -> Self {
        BigFixed { mag: BigInt::zero(), scale }
    }

    pub fn one(scale: usize) -> Self {
        BigFixed { mag: pow10(scale), scale }
    }

    pub fn from_int(n: i64, scale: usize) -> Self {
        BigFixed { mag: BigInt::from(n) * pow10(scale), scale }
    }

    /// `mag · 10^-scale` from raw parts.
    pub fn from_raw(mag: BigInt, scale: usize) -> Self {
        BigFixed { mag, scale }
    }

    /// Parses an optionally signed decimal literal exactly; the scale is the
    /// number of fractional digits written.
    pub fn parse(text: &str) -> Result<Self> {
        let s = text.trim();
        let fail = |reason: &str| Error::Parse { text: text.to_string(), reason: reason.to_string() };
        let (neg, body) = match s.as_bytes().first() {
            Some(b'-') => (true, &s[1..]),
            Some(b'+') => (false, &s[1..]),
            _ => (false, s),
        };
        let (int_part, frac_part) = body.split_once('.').unwrap_or((body, ""));
        if int_part.is_empty() && frac_part.is_empty() {
            return Err(fail("no digits"));
        }
        if let Some(c) = int_part.chars().chain(frac_part.chars()).find(|c| !c.is_ascii_digit()) {
            return Err(fail(&format!("unexpected character `{c}`")));
        }
        let digits = format!("{int_part}{frac_part}");
        let mag: BigInt = digits.parse().map_err(|_| fail("no digits"))?;
        Ok(BigFixed { mag: if neg { -mag } else { mag }, scale: frac_part.len() })
    }

    pub fn scale(&self) -> usize {
        self.scale
    }

    pub fn raw(&self) -> &BigInt {
        &self.mag
    }

    pub fn is_zero(&self) -> bool {
        self.mag.is_zero()
    }

    pub fn is_negative(&self) -> bool {
        self.mag.sign() == Sign::Minus
    }

    /// Changes the scale, truncating toward negative infinity when digits are dropped.
    pub fn rescale(&self, scale: usize) -> Self {
        match scale.cmp(&self.scale) {
            Ordering::Equal => self.clone(),
            Ordering::Greater => BigFixed { mag: &self.mag * pow10(scale - self.scale), scale },
            Ordering::Less => BigFixed { mag: self.mag.div_floor(&pow10(self.scale - scale)), scale },
        }
    }

    fn aligned(&self, other: &BigFixed) -> (BigInt, BigInt, usize) {
        let scale = self.scale.max(other.scale);
        (self.rescale(scale).mag, other.rescale(scale).mag, scale)
    }

    pub fn add(&self, other: &BigFixed) -> Self {
        let (a, b, scale) = self.aligned(other);
        BigFixed { mag: a + b, scale }
    }

    pub fn sub(&self, other: &BigFixed) -> Self {
        let (a, b, scale) = self.aligned(other);
        BigFixed { mag: a - b, scale }
    }

    pub fn mul_int(&self, k: i64) -> Self {
        BigFixed { mag: &self.mag * k, scale: self.scale }
    }

    /// Product truncated (floor) to the larger of the two scales.
    pub fn mul(&self, other: &BigFixed) -> Self {
        let scale = self.scale.max(other.scale);
        let prod = &self.mag * &other.mag;
        let drop = self.scale + other.scale - scale;
        BigFixed { mag: prod.div_floor(&pow10(drop)), scale }
    }

    /// Quotient truncated (floor) at `scale`.
    pub fn div(&self, other: &BigFixed, scale: usize) -> Result<Self> {
        if other.is_zero() {
            return Err(Error::InvalidArgument("division by zero".into()));
        }
        // (a/10^sa) / (b/10^sb) = a 10^{sb+scale-sa} / b  at 10^-scale
        let shift = other.scale + scale;
        let (num, den) = if shift >= self.scale {
            (&self.mag * pow10(shift - self.scale), other.mag.clone())
        } else {
            (self.mag.clone(), &other.mag * pow10(self.scale - shift))
        };
        Ok(BigFixed { mag: num.div_floor(&den), scale })
    }

    pub fn div_int(&self, k: i64) -> Self {
        BigFixed { mag: self.mag.div_floor(&BigInt::from(k)), scale: self.scale }
    }

    pub fn floor(&self) -> BigInt {
        self.mag.div_floor(&pow10(self.scale))
    }

    /// Fractional part `x - floor(x)`, in `[0, 1)`.
    pub fn frac(&self) -> Self {
        BigFixed { mag: self.mag.mod_floor(&pow10(self.scale)), scale: self.scale }
    }

    /// `floor(x · 10^k)` as a big integer.
    pub fn scaled_floor(&self, k: usize) -> BigInt {
        if k >= self.scale {
            &self.mag * pow10(k - self.scale)
        } else {
            self.mag.div_floor(&pow10(self.scale - k))
        }
    }

    /// Square root truncated at the current scale.
    pub fn sqrt(&self) -> Result<Self> {
        if self.is_negative() {
            return Err(Error::InvalidArgument("square root of a negative number".into()));
        }
        Ok(BigFixed { mag: (&self.mag * pow10(self.scale)).sqrt(), scale: self.scale })
    }

    /// `log10 |x|` to double precision; `-inf` for zero.
    pub fn log10_abs(&self) -> f64 {
        if self.mag.is_zero() {
            return f64::NEG_INFINITY;
        }
        let digits = self.mag.abs().to_string();
        let lead = digits.len().min(17);
        let head: f64 = digits[..lead].parse().expect("digits");
        head.log10() + (digits.len() - lead) as f64 - self.scale as f64
    }

    /// Correctly rounded conversion.
    pub fn to_f64(&self) -> f64 {
        num_rational::BigRational::new_raw(self.mag.clone(), pow10(self.scale)).to_f64().unwrap_or(f64::NAN)
    }

    /// Natural logarithm truncated at `scale` (accurate to a few units in the
    /// last place). `x` must be positive.
    pub fn ln(&self, scale: usize) -> Result<Self> {
        if self.mag.sign() != Sign::Plus {
            return Err(Error::InvalidArgument("logarithm of a non-positive number".into()));
        }
        // small arguments lose relative precision at a fixed scale; widen it
        let extra = (-self.log10_abs()).max(0.0).ceil() as usize;
        let work = scale + SERIES_GUARD + extra;
        let mut y = self.rescale(work);
        // y = x / 2^shift with y in [3/4, 3/2)
        let lo = pow10(work) * 3 / 4;
        let hi = pow10(work) * 3 / 2;
        let mut shift: i64 = 0;
        while y.mag < lo {
            y = y.mul_int(2);
            shift -= 1;
        }
        while y.mag >= hi {
            y = y.div_int(2);
            shift += 1;
        }
        let one = BigFixed::one(work);
        let r = y.sub(&one).div(&y.add(&one), work)?;
        let ln_y = atanh_series(&r).mul_int(2);
        let ln2 = ln2(work);
        Ok(ln_y.add(&ln2.mul_int(shift)).rescale(scale))
    }

    /// `e^x` truncated at `scale`, for moderate `|x|`.
    pub fn exp(&self, scale: usize) -> Result<Self> {
        if self.to_f64().abs() > 1e4 {
            return Err(Error::InvalidArgument("exponent too large".into()));
        }
        const HALVINGS: u32 = 16;
        let work = scale + SERIES_GUARD + 8 + (self.to_f64().abs() * std::f64::consts::LOG10_E) as usize;
        let x = self.rescale(work.max(self.scale)).rescale(work).div_int(1 << HALVINGS);
        let mut term = BigFixed::one(work);
        let mut sum = term.clone();
        let mut n = 1i64;
        loop {
            term = term.mul(&x).div_int(n);
            if term.is_zero() {
                break;
            }
            sum = sum.add(&term);
            n += 1;
        }
        for _ in 0..HALVINGS {
            sum = sum.mul(&sum);
        }
        Ok(sum.rescale(scale))
    }
}

impl PartialOrd for BigFixed {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for BigFixed {
    fn cmp(&self, other: &Self) -> Ordering {
        let (a, b, _) = self.aligned(other);
        a.cmp(&b)
    }
}

impl std::fmt::Display for BigFixed {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let neg = self.is_negative();
        let digits = self.mag.abs().to_string();
        let padded = if digits.len() <= self.scale {
            format!("{}{}", "0".repeat(self.scale + 1 - digits.len()), digits)
        } else {
            digits
        };
        let (i, fr) = padded.split_at(padded.len() - self.scale);
        let sign = if neg { "-" } else { "" };
        if fr.is_empty() {
            write!(f, "{sign}{i}")
        } else {
            write!(f, "{sign}{i}.{fr}")
        }
    }
}

/// `Σ r^{2k+1}/(2k+1)` at the scale of `r` for `|r| < 1`.
fn atanh_series(r: &BigFixed) -> BigFixed {
    let r2 = r.mul(r);
    let mut power = r.clone();
    let mut sum = r.clone();
    let mut k = 1i64;
    loop {
        power = power.mul(&r2);
        let term = power.div_int(2 * k + 1);
        if term.mag.is_zero() || (term.mag.abs() <= BigInt::one() && k > 2) {
            break;
        }
        sum = sum.add(&term);
        k += 1;
    }
    sum
}

/// `ln 2 = 2 atanh(1/3)` at `scale`.
pub fn ln2(scale: usize) -> BigFixed {
    let work = scale + SERIES_GUARD;
    let third = BigFixed::one(work).div_int(3);
    atanh_series(&third).mul_int(2).rescale(scale)
}

/// `ln 10 = 3 ln 2 + 2 atanh(1/9)` at `scale`.
pub fn ln10(scale: usize) -> BigFixed {
    let work = scale + SERIES_GUARD;
    let ninth = BigFixed::one(work).div_int(9);
    ln2(work).mul_int(3).add(&atanh_series(&ninth).mul_int(2)).rescale(scale)
}

pub(crate) fn bigint_to_u32(x: &BigInt) -> u32 {
    x.to_u32().expect("small integer")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fx(s: &str) -> BigFixed {
        BigFixed::parse(s).unwrap()
    }

    #[test]
    fn parse_and_display_roundtrip() {
        for s in ["0", "1.5", "-2.25", "0.000123", "12345678901234567890.1"] {
            assert_eq!(fx(s).to_string(), s);
        }
        assert_eq!(fx("+.5").to_string(), "0.5");
        assert!(BigFixed::parse("1e5").is_err());
        assert!(BigFixed::parse(".").is_err());
    }

    #[test]
    fn exact_arithmetic_at_scale() {
        let a = fx("3.14159");
        let b = fx("0.00001");
        assert_eq!(a.add(&b).to_string(), "3.14160");
        assert_eq!(a.mul_int(7).to_string(), "21.99113");
        assert_eq!(a.mul_int(7).frac().to_string(), "0.99113");
        assert_eq!(fx("-0.25").frac().to_string(), "0.75");
        assert_eq!(fx("-0.25").floor(), BigInt::from(-1));
        assert_eq!(fx("2").div(&fx("3"), 5).unwrap().to_string(), "0.66666");
        assert_eq!(fx("1.5").mul(&fx("1.5")).to_string(), "2.2");
        assert_eq!(fx("2").sqrt().unwrap().rescale(0).to_string(), "1");
        assert_eq!(fx("2.000000").sqrt().unwrap().to_string(), "1.414213");
    }

    #[test]
    fn log_and_exp_constants() {
        assert_eq!(ln2(30).to_string(), "0.693147180559945309417232121458");
        assert_eq!(ln10(30).to_string(), "2.302585092994045684017991454684");
        let e = BigFixed::one(0).exp(30).unwrap();
        assert_eq!(e.to_string(), "2.718281828459045235360287471352");
    }

    #[test]
    fn ln_matches_known_values() {
        let v = fx("2").ln(25).unwrap();
        assert_eq!(v.to_string(), ln2(25).to_string());
        let v = fx("1.5").ln(20).unwrap();
        assert_eq!(v.to_string(), "0.40546510810816438197");
        let v = fx("0.001").ln(20).unwrap();
        assert_eq!(v.to_string(), "-6.90775527898213705206");
        let v = fx("123456789012345678901234567890").ln(20).unwrap();
        assert_eq!(v.to_string(), "66.98568871914297739757");
        assert!(fx("0").ln(10).is_err());
        assert!(fx("-1").ln(10).is_err());
    }

    #[test]
    fn exp_inverts_ln() {
        for s in ["0.5", "1.25", "7.75", "9.999"] {
            let x = fx(s);
            let back = x.ln(40).unwrap().exp(35).unwrap();
            let diff = back.sub(&x.rescale(35)).mag.abs();
            assert!(diff < BigInt::from(1000), "{s}: {back}");
        }
    }

    #[test]
    fn log10_abs_handles_extreme_scales() {
        let tiny = BigFixed::from_raw(BigInt::from(25), 4000);
        assert!((tiny.log10_abs() - (25f64.log10() - 4000.0)).abs() < 1e-12);
        let big = BigFixed::from_raw(pow10(3000) * 3, 10);
        assert!((big.log10_abs() - (3f64.log10() + 2990.0)).abs() < 1e-12);
        assert!((fx("0.125").to_f64() - 0.125).abs() < 1e-16);
    }
}
