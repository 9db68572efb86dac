//! Exponential-tilt alternatives on the digit grid: the density of a digit
//! string is proportional to `exp(m^{-1/2} H_m(U))` with the lacunary
//! trigonometric polynomial
//!
//! `H_m(U) = Σ_t Σ_j θc_{j,t} cos(2π j b^{t-1} U) + θs_{j,t} sin(2π j b^{t-1} U)`.
//!
//! Four coefficient families are provided (rotating phase, cyclic phase,
//! regime-switching phase, smooth multi-order weights) plus arbitrary
//! user-supplied matrices.

use std::collections::BTreeMap;
use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::digits::{check_base, DigitStream};
use crate::error::{Error, Result};
use crate::harmonic::unit_phase;

/// Phase targets used for the cyclic model when none are given: the even
/// digits, a balanced cycle of period 5.
pub const DEFAULT_CYCLIC_TARGETS: [u32; 5] = [0, 2, 4, 6, 8];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelKind {
    /// `φ_t = 2π(t-1)/b` on the first harmonic.
    PhaseShift,
    /// `φ_t = 2π r_{ℓ(t)}/b` with `ℓ(t) = 1 + (t-1) mod L`.
    CyclicPhase { targets: Vec<u32> },
    /// `φ_t = 2π Z_t/b`; with `baseline` the rotating phase of the
    /// phase-shift model is added. `path = None` selects the block path
    /// `0,0,1,1,...,b-1,b-1` repeated.
    RegimeSwitch {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        path: Option<Vec<u32>>,
        #[serde(default)]
        baseline: bool,
    },
    /// All orders `j < b` with weights `w_j` (default `∝ exp(-j²)`, unit
    /// Euclidean norm) and the rotating phase.
    NeymanSmooth {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        weights: Option<Vec<f64>>,
    },
}

impl ModelKind {
    pub fn name(&self) -> &'static str {
        match self {
            ModelKind::PhaseShift => "phase_shift",
            ModelKind::CyclicPhase { .. } => "cyclic_phase",
            ModelKind::RegimeSwitch { .. } => "regime_switch",
            ModelKind::NeymanSmooth { .. } => "neyman_smooth",
        }
    }

    /// Roman-numeral label of the table row the model corresponds to.
    pub fn table_label(&self) -> &'static str {
        match self {
            ModelKind::PhaseShift => "i",
            ModelKind::CyclicPhase { .. } => "ii",
            ModelKind::RegimeSwitch { .. } => "iii",
            ModelKind::NeymanSmooth { .. } => "iv",
        }
    }

    /// Parses a model name with default parameters (`i`..`iv` also accepted).
    pub fn parse(name: &str) -> Result<ModelKind> {
        match name.trim().to_ascii_lowercase().as_str() {
            "phase_shift" | "i" | "1" => Ok(ModelKind::PhaseShift),
            "cyclic_phase" | "ii" | "2" => Ok(ModelKind::CyclicPhase { targets: DEFAULT_CYCLIC_TARGETS.to_vec() }),
            "regime_switch" | "iii" | "3" => Ok(ModelKind::RegimeSwitch { path: None, baseline: false }),
            "neyman_smooth" | "iv" | "4" => Ok(ModelKind::NeymanSmooth { weights: None }),
            other => Err(Error::InvalidArgument(format!("unknown model `{other}`"))),
        }
    }

    /// The four table models with default parameters.
    pub fn table_models() -> Vec<ModelKind> {
        ["i", "ii", "iii", "iv"].iter().map(|n| ModelKind::parse(n).expect("known")).collect()
    }
}

/// A model family together with its strength `τ`; the amplitude is `a = b τ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    #[serde(flatten)]
    pub kind: ModelKind,
    pub tau: f64,
}

impl ModelSpec {
    pub fn new(kind: ModelKind, tau: f64) -> Self {
        ModelSpec { kind, tau }
    }

    pub fn amplitude(&self, base: u32) -> f64 {
        f64::from(base) * self.tau
    }

    /// Reads `model`, `tau`, `targets`, `path`, `baseline` and `weights`
    /// from key=value pairs. Lists are comma-separated; a path may also be a
    /// plain digit string such as `0011223344`.
    pub fn from_kv(kv: &BTreeMap<String, String>) -> Result<ModelSpec> {
        let bad = |key: &str, v: &str| Error::InvalidArgument(format!("bad value `{v}` for `{key}`"));
        let model = kv.get("model").map(String::as_str).unwrap_or("phase_shift");
        let mut kind = ModelKind::parse(model)?;
        let tau = match kv.get("tau") {
            Some(v) => v.trim().parse::<f64>().map_err(|_| bad("tau", v))?,
            None => 0.0,
        };
        match &mut kind {
            ModelKind::CyclicPhase { targets } => {
                if let Some(v) = kv.get("targets") {
                    *targets = parse_digit_list(v).ok_or_else(|| bad("targets", v))?;
                }
            }
            ModelKind::RegimeSwitch { path, baseline } => {
                if let Some(v) = kv.get("path") {
                    *path = Some(parse_digit_list(v).ok_or_else(|| bad("path", v))?);
                }
                if let Some(v) = kv.get("baseline") {
                    *baseline = v.trim().parse().map_err(|_| bad("baseline", v))?;
                }
            }
            ModelKind::NeymanSmooth { weights } => {
                if let Some(v) = kv.get("weights") {
                    let w: std::result::Result<Vec<f64>, _> = v.split(',').map(|x| x.trim().parse::<f64>()).collect();
                    *weights = Some(w.map_err(|_| bad("weights", v))?);
                }
            }
            ModelKind::PhaseShift => {}
        }
        Ok(ModelSpec { kind, tau })
    }

    pub fn to_kv(&self) -> BTreeMap<String, String> {
        let mut kv = BTreeMap::new();
        kv.insert("model".to_string(), self.kind.name().to_string());
        kv.insert("tau".to_string(), self.tau.to_string());
        let join_u = |v: &[u32]| v.iter().map(u32::to_string).collect::<Vec<_>>().join(",");
        match &self.kind {
            ModelKind::CyclicPhase { targets } => {
                kv.insert("targets".to_string(), join_u(targets));
            }
            ModelKind::RegimeSwitch { path, baseline } => {
                if let Some(p) = path {
                    kv.insert("path".to_string(), join_u(p));
                }
                kv.insert("baseline".to_string(), baseline.to_string());
            }
            ModelKind::NeymanSmooth { weights: Some(w) } => {
                kv.insert("weights".to_string(), w.iter().map(|x| format!("{x:e}")).collect::<Vec<_>>().join(","));
            }
            _ => {}
        }
        kv
    }

    pub fn label(&self) -> String {
        format!("{}(tau={})", self.kind.name(), self.tau)
    }
}

fn parse_digit_list(text: &str) -> Option<Vec<u32>> {
    let text = text.trim();
    if text.contains(',') {
        text.split(',').map(|x| x.trim().parse().ok()).collect()
    } else {
        text.chars().map(|c| c.to_digit(36)).collect()
    }
}

/// `w_j ∝ exp(-j²)`, `j = 1..b-1`, scaled to unit Euclidean norm.
pub fn neyman_weights(base: u32) -> Vec<f64> {
    let raw: Vec<f64> = (1..base).map(|j| (-(f64::from(j)).powi(2)).exp()).collect();
    let norm = raw.iter().map(|w| w * w).sum::<f64>().sqrt();
    raw.into_iter().map(|w| w / norm).collect()
}

/// Default regime path: blocks `0,0,1,1,...,b-1,b-1`, repeated and truncated.
pub fn block_regime_path(base: u32, m: usize) -> Vec<u32> {
    (0..m).map(|i| ((i / 2) as u32) % base).collect()
}

/// Coefficient matrices `θc_{j,t}`, `θs_{j,t}` stored as `theta_c[j-1][t-1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TiltSpec {
    base: u32,
    m: usize,
    theta_c: Vec<Vec<f64>>,
    theta_s: Vec<Vec<f64>>,
    pub label: String,
}

impl TiltSpec {
    pub fn new(base: u32, theta_c: Vec<Vec<f64>>, theta_s: Vec<Vec<f64>>, label: impl Into<String>) -> Result<Self> {
        check_base(base)?;
        let rows = (base - 1) as usize;
        if theta_c.len() != rows || theta_s.len() != rows {
            return Err(Error::ShapeMismatch(format!("expected {rows} harmonic orders, got {} and {}", theta_c.len(), theta_s.len())));
        }
        let m = theta_c[0].len();
        if m == 0 {
            return Err(Error::ShapeMismatch("tilt has no scales".into()));
        }
        if theta_c.iter().chain(&theta_s).any(|row| row.len() != m) {
            return Err(Error::ShapeMismatch("ragged coefficient matrix".into()));
        }
        if theta_c.iter().chain(&theta_s).flatten().any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument("non-finite tilt coefficient".into()));
        }
        Ok(TiltSpec { base, m, theta_c, theta_s, label: label.into() })
    }

    /// The null model.
    pub fn zero(base: u32, m: usize) -> Result<Self> {
        check_base(base)?;
        let rows = vec![vec![0.0; m]; (base - 1) as usize];
        TiltSpec::new(base, rows.clone(), rows, "null")
    }

    /// Order-`j` coefficients constant in `t`: `θc_{j,t} = c`, `θs_{j,t} = s`.
    pub fn constant(base: u32, m: usize, j: u32, c: f64, s: f64) -> Result<Self> {
        let mut tilt = TiltSpec::zero(base, m)?;
        if j == 0 || j >= base {
            return Err(Error::IndexOutOfRange { name: "j", value: j as usize, max: (base - 1) as usize });
        }
        tilt.theta_c[(j - 1) as usize] = vec![c; m];
        tilt.theta_s[(j - 1) as usize] = vec![s; m];
        tilt.label = format!("constant(j={j},c={c},s={s})");
        Ok(tilt)
    }

    pub fn base(&self) -> u32 {
        self.base
    }

    pub fn precision(&self) -> usize {
        self.m
    }

    /// `θc_{j,t}` for 1-based `j`, `t`.
    pub fn theta_c(&self, j: u32, t: usize) -> f64 {
        self.theta_c[(j - 1) as usize][t - 1]
    }

    pub fn theta_s(&self, j: u32, t: usize) -> f64 {
        self.theta_s[(j - 1) as usize][t - 1]
    }

    /// Largest coefficient magnitude (the uniform bound `M`).
    pub fn max_abs(&self) -> f64 {
        self.theta_c.iter().chain(&self.theta_s).flatten().fold(0.0, |acc, x| acc.max(x.abs()))
    }

    pub fn is_null(&self) -> bool {
        self.max_abs() == 0.0
    }

    /// Highest order with a nonzero coefficient at any scale (0 for the null).
    pub fn highest_order(&self) -> u32 {
        (1..self.base)
            .rev()
            .find(|&j| {
                let r = (j - 1) as usize;
                self.theta_c[r].iter().chain(&self.theta_s[r]).any(|&x| x != 0.0)
            })
            .unwrap_or(0)
    }

    /// Contribution of scale `t` (1-based) at tail value `v`, summing orders
    /// `1..=orders` by the angle-addition recurrence.
    #[inline]
    pub(crate) fn scale_term(&self, t: usize, v: f64, orders: u32) -> f64 {
        if orders == 0 {
            return 0.0;
        }
        let (s1, c1) = (TAU * v).sin_cos();
        let (mut c, mut s) = (c1, s1);
        let mut acc = 0.0;
        for j in 0..orders as usize {
            if j > 0 {
                let next_c = c * c1 - s * s1;
                s = s * c1 + c * s1;
                c = next_c;
            }
            acc += self.theta_c[j][t - 1] * c + self.theta_s[j][t - 1] * s;
        }
        acc
    }
}

/// Coefficients of a model family at base `b` and precision `m`.
pub fn build_tilt(ms: &ModelSpec, base: u32, m: usize) -> Result<TiltSpec> {
    check_base(base)?;
    if !(ms.tau.is_finite() && ms.tau >= 0.0) {
        return Err(Error::InvalidArgument(format!("tau must be finite and non-negative, got {}", ms.tau)));
    }
    if m == 0 {
        return Err(Error::Precision { min: 1, got: 0 });
    }
    let a = ms.amplitude(base);
    let bf = f64::from(base);
    let rotating = |t: usize| TAU * (t - 1) as f64 / bf;
    let check_digits = |v: &[u32], what: &str| -> Result<()> {
        match v.iter().find(|&&d| d >= base) {
            Some(d) => Err(Error::InvalidArgument(format!("{what} value {d} is not a base-{base} digit"))),
            None => Ok(()),
        }
    };
    let (phases, weights): (Vec<f64>, Vec<f64>) = match &ms.kind {
        ModelKind::PhaseShift => ((1..=m).map(rotating).collect(), vec![1.0]),
        ModelKind::CyclicPhase { targets } => {
            if targets.is_empty() {
                return Err(Error::InvalidArgument("cyclic model needs at least one target".into()));
            }
            check_digits(targets, "target")?;
            let l = targets.len();
            ((1..=m).map(|t| TAU * f64::from(targets[(t - 1) % l]) / bf).collect(), vec![1.0])
        }
        ModelKind::RegimeSwitch { path, baseline } => {
            let path = match path {
                Some(p) => {
                    if p.len() != m {
                        return Err(Error::ShapeMismatch(format!("regime path has length {}, expected {m}", p.len())));
                    }
                    p.clone()
                }
                None => block_regime_path(base, m),
            };
            check_digits(&path, "regime")?;
            let phases = (1..=m)
                .map(|t| {
                    let offset = TAU * f64::from(path[t - 1]) / bf;
                    if *baseline {
                        offset + rotating(t)
                    } else {
                        offset
                    }
                })
                .collect();
            (phases, vec![1.0])
        }
        ModelKind::NeymanSmooth { weights } => {
            let w = match weights {
                Some(w) => {
                    if w.len() != (base - 1) as usize {
                        return Err(Error::ShapeMismatch(format!("{} weights for base {base}", w.len())));
                    }
                    let norm: f64 = w.iter().map(|x| x * x).sum();
                    if (norm - 1.0).abs() > 1e-12 {
                        return Err(Error::InvalidArgument(format!("weights have squared norm {norm}, expected 1")));
                    }
                    w.clone()
                }
                None => neyman_weights(base),
            };
            ((1..=m).map(rotating).collect(), w)
        }
    };
    let mut theta_c = vec![vec![0.0; m]; (base - 1) as usize];
    let mut theta_s = theta_c.clone();
    for (j, w) in weights.iter().enumerate() {
        for (t, phi) in phases.iter().enumerate() {
            let (s, c) = phi.sin_cos();
            theta_c[j][t] = a * w * c;
            theta_s[j][t] = a * w * s;
        }
    }
    TiltSpec::new(base, theta_c, theta_s, ms.label())
}

/// `H_m(U_m)` evaluated from scratch with exact phase reduction.
pub fn score_h(tilt: &TiltSpec, ds: &DigitStream) -> Result<f64> {
    if tilt.base != ds.base() || tilt.m != ds.len() {
        return Err(Error::ShapeMismatch(format!(
            "tilt is (b={}, m={}) but the stream is (b={}, m={})",
            tilt.base,
            tilt.m,
            ds.base(),
            ds.len()
        )));
    }
    let tails = ds.tails();
    let mut h = 0.0;
    for (t, &v) in tails.iter().enumerate() {
        for j in 1..tilt.base {
            let z = unit_phase(j, v);
            h += tilt.theta_c(j, t + 1) * z.re + tilt.theta_s(j, t + 1) * z.im;
        }
    }
    Ok(h)
}

/// Noncentrality `λ = ½ Σ_j (θ̄c_j² + θ̄s_j²)` of the limiting law, where
/// `θ̄` are averages over scales.
pub fn theoretical_noncentrality(tilt: &TiltSpec) -> f64 {
    let m = tilt.m as f64;
    let mean = |row: &Vec<f64>| row.iter().sum::<f64>() / m;
    0.5 * tilt
        .theta_c
        .iter()
        .zip(&tilt.theta_s)
        .map(|(c, s)| {
            let (mc, ms) = (mean(c), mean(s));
            let (mc, ms) = (snap(mc, c), snap(ms, s));
            mc * mc + ms * ms
        })
        .sum::<f64>()
}

/// Flushes averages that are zero up to rounding of the summands.
fn snap(mean: f64, row: &[f64]) -> f64 {
    let scale = row.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    if mean.abs() <= 1e-12 * scale.max(f64::MIN_POSITIVE) {
        0.0
    } else {
        mean
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn phase_shift_coefficients() {
        let tilt = build_tilt(&ModelSpec::new(ModelKind::PhaseShift, 1.0), 10, 20).unwrap();
        assert_eq!(tilt.theta_c(1, 1), 10.0);
        assert_eq!(tilt.theta_s(1, 1), 0.0);
        assert!((tilt.theta_c(1, 6) + 10.0).abs() < 1e-12);
        assert!(tilt.theta_s(1, 6).abs() < 1e-12);
        assert_eq!(tilt.highest_order(), 1);
        assert_eq!(tilt.max_abs(), 10.0);
    }

    #[test]
    fn neyman_weight_values() {
        let w = neyman_weights(10);
        assert!((w[0] - 0.99876).abs() < 1e-5);
        assert!((w[1] - 0.04972).abs() < 1e-5);
        assert!((w.iter().map(|x| x * x).sum::<f64>() - 1.0).abs() < 1e-12);
        let tilt = build_tilt(&ModelSpec::new(ModelKind::NeymanSmooth { weights: None }, 2.0), 10, 10).unwrap();
        assert_eq!(tilt.highest_order(), 9);
    }

    #[test]
    fn score_examples() {
        let ds = DigitStream::new(10, vec![0; 5]).unwrap();
        assert_eq!(score_h(&TiltSpec::zero(10, 5).unwrap(), &ds).unwrap(), 0.0);
        let mut c = vec![vec![0.0; 5]; 9];
        c[0][0] = 1.0;
        let tilt = TiltSpec::new(10, c, vec![vec![0.0; 5]; 9], "single").unwrap();
        assert_eq!(score_h(&tilt, &ds).unwrap(), 1.0);
        let short = DigitStream::new(10, vec![0; 4]).unwrap();
        assert!(matches!(score_h(&tilt, &short), Err(Error::ShapeMismatch(_))));
    }

    #[test]
    fn noncentrality_examples() {
        assert_eq!(theoretical_noncentrality(&TiltSpec::zero(10, 7).unwrap()), 0.0);
        let tilt = build_tilt(&ModelSpec::new(ModelKind::PhaseShift, 3.0), 10, 50).unwrap();
        assert_eq!(theoretical_noncentrality(&tilt), 0.0);
        let tilt = TiltSpec::constant(10, 100, 1, 2.0, 0.0).unwrap();
        assert!((theoretical_noncentrality(&tilt) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn regime_path_validation() {
        let ms = ModelSpec::new(ModelKind::RegimeSwitch { path: Some(vec![0, 1, 2]), baseline: false }, 1.0);
        assert!(matches!(build_tilt(&ms, 10, 4), Err(Error::ShapeMismatch(_))));
        assert_eq!(block_regime_path(10, 7), vec![0, 0, 1, 1, 2, 2, 3]);
        assert_eq!(block_regime_path(3, 8), vec![0, 0, 1, 1, 2, 2, 0, 0]);
        let empty = ModelSpec::new(ModelKind::CyclicPhase { targets: vec![] }, 1.0);
        assert!(build_tilt(&empty, 10, 4).is_err());
    }

    #[test]
    fn kv_roundtrip() {
        let ms = ModelSpec::new(ModelKind::RegimeSwitch { path: Some(vec![0, 0, 1, 1]), baseline: true }, 2.5);
        assert_eq!(ModelSpec::from_kv(&ms.to_kv()).unwrap(), ms);
        let mut kv = BTreeMap::new();
        kv.insert("model".to_string(), "ii".to_string());
        kv.insert("targets".to_string(), "05".to_string());
        kv.insert("tau".to_string(), "1".to_string());
        let ms = ModelSpec::from_kv(&kv).unwrap();
        assert_eq!(ms.kind, ModelKind::CyclicPhase { targets: vec![0, 5] });
        assert_eq!(ModelSpec::from_kv(&ms.to_kv()).unwrap(), ms);
    }
}
