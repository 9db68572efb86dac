//! Embedded decimal expansions of mathematical constants.
//!
//! Each expansion carries 1200 fractional digits, truncated (not rounded).
//! The digit files were produced with an arbitrary-precision library; their
//! SHA-256 digests are pinned in `build.rs`, and the integration tests
//! recompute every expansion independently with big-integer arithmetic
//! (Machin's formula for π, the factorial series for e, an integer square
//! root for √2, the Amdeberhan–Zeilberger series for ζ(3) and the
//! Brent–McMillan algorithm for γ).

use crate::bigfixed::BigFixed;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Constant {
    pub name: &'static str,
    pub symbol: &'static str,
    /// `"<integer part>.<fractional digits>"`.
    pub text: &'static str,
}

const PI: &str = include_str!("../data/constants/pi.txt");
const E: &str = include_str!("../data/constants/e.txt");
const SQRT2: &str = include_str!("../data/constants/sqrt2.txt");
const GAMMA: &str = include_str!("../data/constants/gamma.txt");
const ZETA3: &str = include_str!("../data/constants/zeta3.txt");

/// π, e, √2, the Euler–Mascheroni constant γ and Apéry's constant ζ(3).
pub const CONSTANTS: [Constant; 5] = [
    Constant { name: "pi", symbol: "π", text: PI },
    Constant { name: "e", symbol: "e", text: E },
    Constant { name: "sqrt2", symbol: "√2", text: SQRT2 },
    Constant { name: "gamma", symbol: "γ", text: GAMMA },
    Constant { name: "zeta3", symbol: "ζ(3)", text: ZETA3 },
];

impl Constant {
    pub fn lookup(name: &str) -> Result<Constant> {
        let key = name.trim().to_ascii_lowercase();
        let key = match key.as_str() {
            "π" => "pi",
            "√2" | "sqrt(2)" => "sqrt2",
            "euler" | "euler_gamma" | "γ" => "gamma",
            "zeta(3)" | "apery" | "ζ(3)" => "zeta3",
            other => other,
        };
        CONSTANTS
            .iter()
            .find(|c| c.name == key)
            .copied()
            .ok_or_else(|| Error::UnknownConstant(name.to_string()))
    }

    pub fn digits_text(&self) -> &'static str {
        self.text.trim()
    }

    pub fn fractional_digits(&self) -> usize {
        let t = self.digits_text();
        t.len() - t.find('.').expect("decimal point") - 1
    }

    /// Value truncated to `scale` fractional digits; errors if the table is shorter.
    pub fn truncated(&self, scale: usize) -> Result<BigFixed> {
        let available = self.fractional_digits();
        if scale > available {
            return Err(Error::InsufficientExpansion { name: self.name.to_string(), available, required: scale });
        }
        let full = BigFixed::parse(self.digits_text())?;
        Ok(full.rescale(scale))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_has_enough_digits() {
        for c in CONSTANTS {
            assert!(c.fractional_digits() >= 1100, "{}", c.name);
        }
    }

    #[test]
    fn lookup_aliases() {
        assert_eq!(Constant::lookup("PI").unwrap().name, "pi");
        assert_eq!(Constant::lookup("apery").unwrap().name, "zeta3");
        assert_eq!(Constant::lookup("euler").unwrap().name, "gamma");
        assert!(matches!(Constant::lookup("tau"), Err(Error::UnknownConstant(_))));
    }

    #[test]
    fn leading_digits() {
        let pi = Constant::lookup("pi").unwrap();
        assert_eq!(pi.truncated(10).unwrap().to_string(), "3.1415926535");
        let g = Constant::lookup("gamma").unwrap();
        assert_eq!(g.truncated(12).unwrap().to_string(), "0.577215664901");
        assert!(matches!(pi.truncated(5000), Err(Error::InsufficientExpansion { .. })));
    }
}
