//! Digit-stream sources: seeded uniform digits, irrational rotations in exact
//! decimal fixed point, and the logistic and Gauss maps transformed to
//! uniform invariant laws.
//!
//! The chaotic maps are iterated in decimal fixed point at a configurable
//! working precision. Digits are read by comparing the state against the
//! preimages of the digit boundaries (`sin²(kπ/20)` for the logistic map,
//! `2^{k/10} - 1` for the Gauss map), so no transcendental function is
//! evaluated per step. A first-order bound on the accumulated rounding error
//! is carried along the orbit; a digit whose boundary lies inside that bound
//! is reported as an error instead of being guessed.

use num_bigint::BigInt;
use num_traits::Zero;
use serde::Serialize;

use crate::bigfixed::{pow10, BigFixed};
use crate::constants::Constant;
use crate::digits::DigitStream;
use crate::error::{Error, Result};
use crate::rng::{DigitRng, RngSpec};

/// Default number of guard digits for rotations.
pub const DEFAULT_GUARD: usize = 40;

/// Extra digits carried by the chaotic-map iterations beyond the requested precision.
const MAP_GUARD: usize = 10;

/// I.i.d. uniform base-`b` digits from a reproducible stream.
pub fn uniform_digits(rng: RngSpec, base: u32, m: usize) -> Result<DigitStream> {
    crate::digits::check_base(base)?;
    if m == 0 {
        return Err(Error::Precision { min: 1, got: 0 });
    }
    Ok(DigitRng::new(rng).digit_stream(base, m))
}

/// A real number given either exactly or as an embedded truncated expansion.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Real {
    Exact(BigFixed),
    Constant(Constant),
}

impl Real {
    /// Parses a constant name or a decimal literal.
    pub fn parse(text: &str) -> Result<Real> {
        match Constant::lookup(text) {
            Ok(c) => Ok(Real::Constant(c)),
            Err(_) => BigFixed::parse(text).map(Real::Exact),
        }
    }

    pub fn label(&self) -> String {
        match self {
            Real::Exact(x) => x.to_string(),
            Real::Constant(c) => c.name.to_string(),
        }
    }

    /// Value truncated to at most `scale` digits, with the log10 of an upper
    /// bound on the truncation error (`-inf` when exact).
    fn approx(&self, scale: usize) -> (BigFixed, f64) {
        match self {
            Real::Exact(x) => {
                if x.scale() <= scale {
                    (x.rescale(scale), f64::NEG_INFINITY)
                } else {
                    (x.rescale(scale), -(scale as f64))
                }
            }
            Real::Constant(c) => {
                let avail = c.fractional_digits().min(scale);
                let v = c.truncated(avail).expect("within table").rescale(scale);
                (v, -(avail as f64))
            }
        }
    }
}

/// Irrational rotation `x_n = x0 + n ξ (mod 1)` with digits `D = floor(10 x_n)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rotation {
    pub xi: Real,
    pub x0: BigFixed,
    pub guard: usize,
    /// Index `n` of the orbit point that yields `D_1`. The usual convention is
    /// 1 (`D_t` from `x_t`); 0 makes the first digit come from `x0` itself.
    pub first_index: u64,
}

impl Rotation {
    pub fn new(xi: Real) -> Self {
        Rotation { xi, x0: BigFixed::zero(0), guard: DEFAULT_GUARD, first_index: 1 }
    }

    pub fn with_first_index(mut self, first_index: u64) -> Self {
        self.first_index = first_index;
        self
    }

    pub fn with_x0(mut self, x0: BigFixed) -> Self {
        self.x0 = x0;
        self
    }

    pub fn with_guard(mut self, guard: usize) -> Self {
        self.guard = guard;
        self
    }

    /// Fractional digits of ξ required for `m` exact rotation digits.
    pub fn required_expansion(&self, m: usize) -> usize {
        let last = self.first_index + m as u64;
        m + self.guard + last.to_string().len()
    }

    pub fn digits(&self, m: usize) -> Result<DigitStream> {
        if m == 0 {
            return Err(Error::Precision { min: 1, got: 0 });
        }
        if self.x0.is_negative() || self.x0 >= BigFixed::one(0) {
            return Err(Error::InvalidArgument(format!("x0 = {} is outside [0, 1)", self.x0)));
        }
        let (xi, exact) = match &self.xi {
            Real::Exact(v) => (v.rescale(v.scale().max(self.x0.scale())), true),
            Real::Constant(c) => {
                let p = self.required_expansion(m);
                (c.truncated(p)?.frac(), false)
            }
        };
        let scale = xi.scale().max(self.x0.scale());
        let xi = xi.rescale(scale);
        let unit = pow10(scale);
        let tenth = pow10(scale) / 10;
        // boundary band 10^-guard at this scale
        let band = if self.guard >= scale { BigInt::zero() } else { pow10(scale - self.guard) };
        let mut x = self.x0.rescale(scale).add(&xi.mul_int(self.first_index as i64)).frac();
        let mut digits = Vec::with_capacity(m);
        for t in 0..m {
            let raw = x.raw();
            let digit = raw / &tenth;
            let n = self.first_index + t as u64;
            if !exact && n > 0 {
                let offset = raw - &digit * &tenth;
                let to_upper = &tenth - &offset;
                if offset < band || to_upper <= band {
                    return Err(Error::BoundaryProximity { step: t + 1, guard: self.guard });
                }
            }
            digits.push(crate::bigfixed::bigint_to_u32(&digit) as u8);
            x = x.add(&xi);
            if x.raw() >= &unit {
                x = BigFixed::from_raw(x.raw() - &unit, scale);
            }
        }
        DigitStream::new(10, digits)
    }
}

/// `D_t = floor(10 frac(x0 + t ξ))` for `t = 1..m`.
pub fn rotation_digits(xi: Real, x0: BigFixed, m: usize, guard: usize) -> Result<DigitStream> {
    Rotation::new(xi).with_x0(x0).with_guard(guard).digits(m)
}

/// Options shared by the chaotic-map generators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct MapOptions {
    /// Working precision in decimal digits; `None` means `4 m`.
    pub precision_digits: Option<usize>,
    /// Orbit index yielding `D_1` (1: `x_1`, 0: the seed itself).
    pub first_index: u64,
}

impl Default for MapOptions {
    fn default() -> Self {
        MapOptions { precision_digits: None, first_index: 1 }
    }
}

/// Digits produced by a chaotic map, with the precision that produced them.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MapDigits {
    pub stream: DigitStream,
    pub precision_digits: usize,
    /// log10 of the final bound on the accumulated state error.
    pub error_bound_log10: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum MapKind {
    Logistic,
    Gauss,
}

/// `log10(10^a + 10^b)`.
fn log10_add(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if lo == f64::NEG_INFINITY {
        return hi;
    }
    hi + (1.0 + 10f64.powf(lo - hi)).log10()
}

/// Digit-boundary preimages `c_1 < ... < c_9` at `scale`, accurate to a few
/// units of `10^-scale`.
fn logistic_thresholds(scale: usize) -> Vec<BigFixed> {
    // sin²(kπ/20) = (1 - cos(kπ/10)) / 2 with the closed forms of cos(kπ/10)
    let s = scale + 4;
    let one = BigFixed::one(s);
    let sqrt5 = BigFixed::from_int(5, s).sqrt().expect("positive");
    let cos1 = BigFixed::from_int(5, s).add(&sqrt5).div_int(8).sqrt().expect("positive");
    let cos2 = one.add(&sqrt5).div_int(4);
    let cos3 = BigFixed::from_int(5, s).sub(&sqrt5).div_int(8).sqrt().expect("positive");
    let cos4 = sqrt5.sub(&one).div_int(4);
    let zero = BigFixed::zero(s);
    let neg = |c: &BigFixed| zero.sub(c);
    let cosines = [cos1.clone(), cos2.clone(), cos3.clone(), cos4.clone(), zero.clone(), neg(&cos4), neg(&cos3), neg(&cos2), neg(&cos1)];
    cosines.iter().map(|c| one.sub(c).div_int(2).rescale(scale)).collect()
}

fn gauss_thresholds(scale: usize) -> Vec<BigFixed> {
    // 2^{k/10} - 1 = floor((2^k 10^{10 s})^{1/10}) 10^-s - 1
    (1..10u32)
        .map(|k| {
            let radicand = BigInt::from(2u32).pow(k) * pow10(10 * scale);
            let root = radicand.nth_root(10);
            BigFixed::from_raw(root - pow10(scale), scale)
        })
        .collect()
}

fn iterate_map(kind: MapKind, x0: &Real, m: usize, opts: MapOptions) -> Result<MapDigits> {
    if m == 0 {
        return Err(Error::Precision { min: 1, got: 0 });
    }
    let min_precision = match kind {
        MapKind::Logistic => 2 * m,
        MapKind::Gauss => 4 * m,
    };
    let precision = opts.precision_digits.unwrap_or(4 * m);
    if precision < min_precision {
        return Err(Error::Precision { min: min_precision, got: precision });
    }
    let work = precision + MAP_GUARD;
    let (mut x, mut err) = x0.approx(work);
    let zero = BigFixed::zero(work);
    let one = BigFixed::one(work);
    if x <= zero || x >= one {
        return Err(Error::InvalidArgument(format!("seed {} is outside (0, 1)", x0.label())));
    }
    let thresholds = match kind {
        MapKind::Logistic => logistic_thresholds(work + 4),
        MapKind::Gauss => gauss_thresholds(work + 4),
    };
    let threshold_err = -((work + 2) as f64);
    let ulp = -(work as f64);

    let total = opts.first_index as usize + m;
    let mut digits = Vec::with_capacity(m);
    for n in 0..total {
        if n >= opts.first_index as usize {
            let mut d = 0u8;
            let mut closest = f64::INFINITY;
            for c in &thresholds {
                let diff = x.sub(c);
                closest = closest.min(diff.log10_abs());
                if !diff.is_negative() {
                    d += 1;
                }
            }
            if closest <= log10_add(err, threshold_err) {
                return Err(Error::BoundaryProximity { step: digits.len() + 1, guard: (-err) as usize });
            }
            digits.push(d);
        }
        if n + 1 == total {
            break;
        }
        let xf = x.to_f64();
        match kind {
            MapKind::Logistic => {
                // x' = 4x(1 - x); |dx'| <= (4|1 - 2x| + 4|dx|)|dx| + ulp
                let gain = 4.0 * (1.0 - 2.0 * xf).abs() + 4.0 * 10f64.powf(err);
                x = x.mul(&one.sub(&x)).mul_int(4);
                err = log10_add(err + gain.log10(), ulp);
                if x <= zero || x >= one || (x.log10_abs() <= err) || one.sub(&x).log10_abs() <= err {
                    return Err(Error::DegenerateOrbit { step: n + 1, reason: format!("state reached {x}") });
                }
            }
            MapKind::Gauss => {
                // y = 1/x with |dy| <= |dx| / (x (x - |dx|)) + ulp
                let dx = 10f64.powf(err);
                let y = one.div(&x, work)?;
                let denom = xf * (xf - dx);
                if denom.is_nan() || denom <= 0.0 {
                    return Err(Error::DegenerateOrbit { step: n + 1, reason: "state indistinguishable from 0".into() });
                }
                err = log10_add(err - denom.log10(), ulp);
                x = y.frac();
                if x.is_zero() {
                    return Err(Error::DegenerateOrbit { step: n + 1, reason: "orbit reached 0 (rational seed)".into() });
                }
                let to_next = one.sub(&x);
                if x.log10_abs() <= err || to_next.log10_abs() <= err {
                    return Err(Error::DegenerateOrbit { step: n + 1, reason: "partial quotient not resolved at working precision".into() });
                }
            }
        }
    }
    let stream = DigitStream::new(10, digits)?;
    Ok(MapDigits { stream, precision_digits: precision, error_bound_log10: err })
}

/// Logistic map `x' = 4x(1 - x)` read through `u = (2/π) asin(√x)`,
/// `D_t = floor(10 u_t)`.
pub fn logistic_digits(x0: &Real, m: usize, opts: MapOptions) -> Result<MapDigits> {
    iterate_map(MapKind::Logistic, x0, m, opts)
}

/// Gauss map `x' = frac(1/x)` read through `u = log2(1 + x)`, `D_t = floor(10 u_t)`.
pub fn gauss_map_digits(x0: &Real, m: usize, opts: MapOptions) -> Result<MapDigits> {
    iterate_map(MapKind::Gauss, x0, m, opts)
}

/// Digits for the maps from a double-precision orbit (`x' = 4x(1-x)` or
/// `x' = 1/x - floor(1/x)` in IEEE arithmetic). The orbit departs from the
/// exact one after a few dozen steps; provided for comparison only.
pub fn double_precision_map_digits(gauss: bool, x0: f64, m: usize, first_index: u64) -> Result<DigitStream> {
    let mut x = x0;
    let mut digits = Vec::with_capacity(m);
    for n in 0..(first_index as usize + m) {
        if n >= first_index as usize {
            let u = if gauss {
                (1.0 + x).ln() / std::f64::consts::LN_2
            } else {
                std::f64::consts::FRAC_2_PI * x.sqrt().asin()
            };
            digits.push(((10.0 * u).floor() as i64).clamp(0, 9) as u8);
        }
        x = if gauss {
            if x == 0.0 {
                return Err(Error::DegenerateOrbit { step: n + 1, reason: "orbit reached 0".into() });
            }
            let y = 1.0 / x;
            y - y.floor()
        } else {
            4.0 * x * (1.0 - x)
        };
    }
    DigitStream::new(10, digits)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exact(s: &str) -> Real {
        Real::Exact(BigFixed::parse(s).unwrap())
    }

    #[test]
    fn uniform_digits_reference_sequence() {
        let ds = uniform_digits(RngSpec::new(1, 0), 10, 20).unwrap();
        assert_eq!(ds.to_digit_string(), REFERENCE_SEED1_STREAM0);
        let other = uniform_digits(RngSpec::new(1, 1), 10, 20).unwrap();
        assert_ne!(ds, other);
        assert!(uniform_digits(RngSpec::new(1, 0), 1, 5).is_err());
    }

    // frozen output of the documented ChaCha8 recurrence for (seed 1, stream 0)
    const REFERENCE_SEED1_STREAM0: &str = "40522741874502429991";

    #[test]
    fn rotation_pi_leading_digits() {
        let pi = Real::Constant(Constant::lookup("pi").unwrap());
        let ds = rotation_digits(pi, BigFixed::zero(0), 3, DEFAULT_GUARD).unwrap();
        assert_eq!(ds.digits(), &[1, 2, 4]);
    }

    #[test]
    fn rotation_rational_alternates() {
        let ds = rotation_digits(exact("0.5"), BigFixed::zero(0), 8, DEFAULT_GUARD).unwrap();
        assert_eq!(ds.digits(), &[5, 0, 5, 0, 5, 0, 5, 0]);
    }

    #[test]
    fn rotation_rational_is_periodic() {
        let ds = rotation_digits(exact("0.37"), BigFixed::zero(0), 250, 10).unwrap();
        let d = ds.digits();
        assert_eq!(&d[..4], &[3, 7, 1, 4]);
        for t in 100..250 {
            assert_eq!(d[t], d[t - 100]);
        }
    }

    #[test]
    fn rotation_first_index_zero_prepends_seed_digit() {
        let pi = Real::Constant(Constant::lookup("pi").unwrap());
        let ds = Rotation::new(pi).with_first_index(0).digits(4).unwrap();
        assert_eq!(ds.digits(), &[0, 1, 2, 4]);
    }

    #[test]
    fn rotation_needs_enough_digits() {
        let pi = Real::Constant(Constant::lookup("pi").unwrap());
        let err = rotation_digits(pi, BigFixed::zero(0), 1190, DEFAULT_GUARD).unwrap_err();
        assert!(matches!(err, Error::InsufficientExpansion { .. }));
    }

    #[test]
    fn rotation_flags_boundary_proximity() {
        let e = Real::Constant(Constant::lookup("e").unwrap());
        assert_eq!(Rotation::new(e.clone()).digits(30).unwrap().len(), 30);
        // choose x0 so that x_1 sits 1e-45 above the boundary 0.8
        let frac_e = Constant::lookup("e").unwrap().truncated(200).unwrap().frac();
        let nudge = BigFixed::parse(&format!("0.{}1", "0".repeat(44))).unwrap();
        let x0 = BigFixed::parse("0.8").unwrap().rescale(200).sub(&frac_e).add(&nudge);
        let err = Rotation::new(e).with_x0(x0).digits(5).unwrap_err();
        assert!(matches!(err, Error::BoundaryProximity { step: 1, .. }));
    }

    #[test]
    fn logistic_first_transform() {
        // x0 = 0.1 -> x1 = 0.36, u1 = (2/π) asin(0.6)
        let out = logistic_digits(&exact("0.1"), 1, MapOptions::default()).unwrap();
        let u1 = std::f64::consts::FRAC_2_PI * 0.6f64.asin();
        assert_eq!(out.stream.digits(), &[(10.0 * u1).floor() as u8]);
        assert_eq!(out.precision_digits, 4);
    }

    #[test]
    fn logistic_half_is_degenerate() {
        let err = logistic_digits(&exact("0.5"), 5, MapOptions::default()).unwrap_err();
        assert!(matches!(err, Error::DegenerateOrbit { step: 1, .. }));
        assert!(matches!(logistic_digits(&exact("1.0"), 5, MapOptions::default()), Err(Error::InvalidArgument(_))));
        assert!(matches!(logistic_digits(&exact("0"), 5, MapOptions::default()), Err(Error::InvalidArgument(_))));
        let low = MapOptions { precision_digits: Some(9), first_index: 1 };
        assert!(matches!(logistic_digits(&exact("0.1"), 5, low), Err(Error::Precision { min: 10, got: 9 })));
    }

    #[test]
    fn logistic_thresholds_match_sine_squares() {
        for (k, c) in logistic_thresholds(30).iter().enumerate() {
            let expected = ((k + 1) as f64 * std::f64::consts::PI / 20.0).sin().powi(2);
            assert!((c.to_f64() - expected).abs() < 1e-15);
        }
    }

    #[test]
    fn gauss_thresholds_match_powers_of_two() {
        for (k, c) in gauss_thresholds(30).iter().enumerate() {
            let expected = 2f64.powf((k + 1) as f64 / 10.0) - 1.0;
            assert!((c.to_f64() - expected).abs() < 1e-15);
        }
    }

    #[test]
    fn gauss_digit_of_one_half() {
        // log2(1.5) = 0.58496...; x0 = 1/2 -> digit 5 when read at index 0
        let opts = MapOptions { precision_digits: None, first_index: 0 };
        let err = gauss_map_digits(&exact("0.5"), 2, opts).unwrap_err();
        // 1/0.5 = 2 exactly, so the orbit terminates after the first digit
        assert!(matches!(err, Error::DegenerateOrbit { step: 1, .. }));
        let out = gauss_map_digits(&exact("0.5"), 1, opts).unwrap();
        assert_eq!(out.stream.digits(), &[5]);
    }

    #[test]
    fn gauss_golden_ratio_is_fixed() {
        // (√5 - 1)/2 satisfies 1/x - 1 = x, so every digit is floor(10 log2(1.618...)) = 6
        let sqrt5 = BigFixed::from_int(5, 500).sqrt().unwrap();
        let phi = sqrt5.sub(&BigFixed::one(500)).div_int(2);
        let out = gauss_map_digits(&Real::Exact(phi), 60, MapOptions::default()).unwrap();
        assert!(out.stream.digits().iter().all(|&d| d == 6));
    }

    #[test]
    fn gauss_rational_seed_terminates() {
        let err = gauss_map_digits(&exact("0.1"), 5, MapOptions::default()).unwrap_err();
        assert!(matches!(err, Error::DegenerateOrbit { .. }));
    }

    #[test]
    fn double_precision_orbits_agree_initially() {
        let hp = logistic_digits(&exact("0.1"), 20, MapOptions::default()).unwrap();
        let dp = double_precision_map_digits(false, 0.1, 20, 1).unwrap();
        assert_eq!(hp.stream, dp);
    }
}
