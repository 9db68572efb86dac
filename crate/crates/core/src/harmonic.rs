//! Lacunary harmonic components `Z_{j,t} = exp(2πi j b^{t-1} U_m)`, their
//! scale averages, the statistic `T`, the Fourier reconstruction of digit
//! probabilities and digit-law diagnostics.
//!
//! Phases are never formed from `j b^{t-1} U_m` directly: for large `t` that
//! product exceeds the resolution of a double. Shifting the radix point
//! `t - 1` places leaves `D_t/b + R_t` (the digits `D_t..D_m`) as the only
//! part that matters modulo one, and that quantity lies in `[0, 1)`.

use std::collections::BTreeMap;
use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::digits::DigitStream;
use crate::error::{Error, Result};
use crate::report::{Calibration, Method, TestReport};
use crate::rng::{DigitRng, RngSpec};
use crate::special::{chi2_sf, NullLaw};

/// `exp(2πi j v)` for a scale-local value `v ∈ [0, 1)`.
#[inline]
pub(crate) fn unit_phase(j: u32, v: f64) -> Complex64 {
    let (s, c) = (TAU * f64::from(j) * v).sin_cos();
    Complex64::new(c, s)
}

/// Single harmonic component `Z_{j,t}` (1-based `j`, `t`).
pub fn harmonic_component(ds: &DigitStream, j: u32, t: usize) -> Result<Complex64> {
    let b = ds.base();
    if j == 0 || j >= b {
        return Err(Error::IndexOutOfRange { name: "j", value: j as usize, max: (b - 1) as usize });
    }
    if t == 0 || t > ds.len() {
        return Err(Error::IndexOutOfRange { name: "t", value: t, max: ds.len() });
    }
    let bf = f64::from(b);
    let v = ds.digits()[t - 1..].iter().rev().fold(0.0, |acc, &d| (f64::from(d) + acc) / bf);
    Ok(unit_phase(j, v))
}

/// Scale-averaged harmonic coefficients `Z̄_j`, `j = 1..b-1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HarmonicSummary {
    base: u32,
    m: usize,
    zbar: Vec<Complex64>,
    /// Row `t - 1` holds `Z̄_j^{(t)} = t^{-1} Σ_{r<=t} Z_{j,r}` for every `j`.
    partial: Option<Vec<Vec<Complex64>>>,
}

impl HarmonicSummary {
    pub fn base(&self) -> u32 {
        self.base
    }

    pub fn precision(&self) -> usize {
        self.m
    }

    /// `Z̄_1..Z̄_{b-1}`.
    pub fn zbar(&self) -> &[Complex64] {
        &self.zbar
    }

    /// Partial averages at scale `t` (1-based), if they were retained.
    pub fn partial(&self, t: usize) -> Result<&[Complex64]> {
        let rows = self.partial.as_ref().ok_or(Error::MissingPartials)?;
        if t == 0 || t > self.m {
            return Err(Error::IndexOutOfRange { name: "t", value: t, max: self.m });
        }
        Ok(&rows[t - 1])
    }

    pub fn has_partials(&self) -> bool {
        self.partial.is_some()
    }
}

/// Averages `Z_{j,t}` over scales; with `keep_partials` the running averages
/// used for cumulative-imbalance trajectories are stored too.
pub fn harmonic_averages(ds: &DigitStream, keep_partials: bool) -> HarmonicSummary {
    let b = ds.base();
    let m = ds.len();
    let orders = (b - 1) as usize;
    let mut sums = vec![Complex64::new(0.0, 0.0); orders];
    let mut partial = keep_partials.then(|| Vec::with_capacity(m));
    for (t, &v) in ds.tails().iter().enumerate() {
        for (j, sum) in (1..b).zip(sums.iter_mut()) {
            *sum += unit_phase(j, v);
        }
        if let Some(rows) = partial.as_mut() {
            let scale = (t + 1) as f64;
            rows.push(sums.iter().map(|s| s / scale).collect::<Vec<_>>());
        }
    }
    let mf = m as f64;
    let zbar = sums.iter().map(|s| s / mf).collect();
    HarmonicSummary { base: b, m, zbar, partial }
}

/// `T = 2m Σ_j |Z̄_j|²`.
pub fn lacunary_statistic(hs: &HarmonicSummary) -> f64 {
    2.0 * hs.m as f64 * hs.zbar.iter().map(|z| z.norm_sqr()).sum::<f64>()
}

/// Degrees of freedom of the null limit, `2(b - 1)`.
pub fn lacunary_df(base: u32) -> u32 {
    2 * (base - 1)
}

/// Lacunary uniformity test with the asymptotic `χ²_{2(b-1)}` calibration.
pub fn lacunary_test(ds: &DigitStream) -> TestReport {
    let hs = harmonic_averages(ds, false);
    lacunary_report(&hs)
}

pub fn lacunary_report(hs: &HarmonicSummary) -> TestReport {
    let t = lacunary_statistic(hs);
    let df = lacunary_df(hs.base);
    let mut aux = BTreeMap::new();
    aux.insert("m".to_string(), hs.m as f64);
    TestReport {
        method: Method::Lacunary,
        statistic: t,
        null_law: NullLaw::ChiSquare { df },
        p_value: chi2_sf(t, df),
        calibration: Calibration::Asymptotic,
        aux,
        note: Some("chi-square calibration is asymptotic in the precision m".to_string()),
    }
}

/// Lacunary test with a Monte Carlo null: `replicates` uniform streams of the
/// same base and precision, p-value `(1 + #{T* >= T}) / (1 + replicates)`.
pub fn lacunary_test_mc(ds: &DigitStream, replicates: usize, seed: u64) -> TestReport {
    use rayon::prelude::*;
    let mut report = lacunary_test(ds);
    let observed = report.statistic;
    let exceed = (0..replicates as u64)
        .into_par_iter()
        .filter(|&r| {
            let mut rng = DigitRng::new(RngSpec::new(seed, r));
            let sim = rng.digit_stream(ds.base(), ds.len());
            lacunary_statistic(&harmonic_averages(&sim, false)) >= observed
        })
        .count();
    report.p_value = (1 + exceed) as f64 / (1 + replicates) as f64;
    report.calibration = Calibration::MonteCarlo { replicates };
    report.note = Some(format!("null simulated with seed {seed}"));
    report
}

/// Digit probabilities reconstructed from the lacunary averages,
/// `p̂(d) = 1/b + (1/b) Σ_j Z̄_j exp(-2πi j d / b)`, or from the partial
/// averages `Z̄_j^{(t)}` when `t` is given.
pub fn fourier_reconstruction(hs: &HarmonicSummary, t: Option<usize>) -> Result<Vec<Complex64>> {
    let coefs = match t {
        None => hs.zbar.as_slice(),
        Some(t) => hs.partial(t)?,
    };
    Ok(reconstruct(hs.base, coefs))
}

fn reconstruct(base: u32, coefs: &[Complex64]) -> Vec<Complex64> {
    let bf = f64::from(base);
    (0..base)
        .map(|d| {
            let mut acc = Complex64::new(0.0, 0.0);
            for (j, z) in (1..base).zip(coefs) {
                let k = (u64::from(j) * u64::from(d)) % u64::from(base);
                acc += z * unit_phase(1, k as f64 / bf).conj();
            }
            (acc + 1.0) / bf
        })
        .collect()
}

/// Cumulative imbalance `I(t, d) = √t Σ_{r<=t} |p̂^{(r)}(d) - 1/b|`, returned
/// as `m` rows of `b` values.
pub fn cumulative_imbalance(ds: &DigitStream) -> Vec<Vec<f64>> {
    let hs = harmonic_averages(ds, true);
    imbalance_trajectory(ds.base(), hs.partial.as_ref().expect("partials requested"))
}

/// [`cumulative_imbalance`] from rows of partial averages `Z̄_j^{(t)}`.
pub fn imbalance_trajectory(base: u32, partials: &[Vec<Complex64>]) -> Vec<Vec<f64>> {
    let inv_b = 1.0 / f64::from(base);
    let mut running = vec![0.0; base as usize];
    partials
        .iter()
        .enumerate()
        .map(|(i, coefs)| {
            let p = reconstruct(base, coefs);
            for (acc, pd) in running.iter_mut().zip(&p) {
                *acc += (pd - inv_b).norm();
            }
            let scale = ((i + 1) as f64).sqrt();
            running.iter().map(|s| scale * s).collect()
        })
        .collect()
}

/// Mean of the cumulative-imbalance trajectories under uniform digits, the
/// reference line `(b - 1)/b²` drawn with them.
pub fn imbalance_reference(base: u32) -> f64 {
    f64::from(base - 1) / f64::from(base * base)
}

/// Empirical digit law at one scale across a collection of streams.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DigitLawDiagnostics {
    pub scale: usize,
    pub base: u32,
    pub samples: usize,
    /// `φ̂_j(t) = Σ_d exp(2πi j d/b) P̂(D_t = d)` for `j = 0..b-1`.
    pub phi: Vec<Complex64>,
    /// `κ̂_j(t)`: sample mean of `exp(2πi j R_t)`, `j = 0..b-1`.
    pub kappa: Vec<Complex64>,
    /// Sample mean of `Z_{j,t}`, `j = 0..b-1` (entry 0 is 1).
    pub mean_z: Vec<Complex64>,
    /// Digit histogram at scale `t`.
    pub counts: Vec<usize>,
}

impl DigitLawDiagnostics {
    /// Digit probabilities recovered from `φ̂` by Fourier inversion.
    pub fn inverted_probabilities(&self) -> Vec<f64> {
        let b = self.base;
        let bf = f64::from(b);
        (0..b)
            .map(|d| {
                let mut acc = Complex64::new(0.0, 0.0);
                for j in 1..b {
                    let k = (u64::from(j) * u64::from(d)) % u64::from(b);
                    acc += self.phi[j as usize] * unit_phase(1, k as f64 / bf).conj();
                }
                (1.0 + acc.re) / bf
            })
            .collect()
    }

    pub fn empirical_probabilities(&self) -> Vec<f64> {
        let n = self.samples as f64;
        self.counts.iter().map(|&c| c as f64 / n).collect()
    }

    /// `κ̂_j(t) φ̂_j(t)`, the mean of `Z_{j,t}` predicted when `R_t` and `D_t`
    /// are independent.
    pub fn predicted_mean_z(&self) -> Vec<Complex64> {
        self.kappa.iter().zip(&self.phi).map(|(k, p)| k * p).collect()
    }
}

pub fn digit_law_diagnostics(samples: &[DigitStream], t: usize) -> Result<DigitLawDiagnostics> {
    let first = samples.first().ok_or(Error::EmptySample)?;
    let b = first.base();
    let m = first.len();
    if t == 0 || t > m {
        return Err(Error::IndexOutOfRange { name: "t", value: t, max: m });
    }
    let bf = f64::from(b);
    let mut counts = vec![0usize; b as usize];
    let mut kappa = vec![Complex64::new(0.0, 0.0); b as usize];
    let mut mean_z = vec![Complex64::new(0.0, 0.0); b as usize];
    for ds in samples {
        if ds.base() != b || ds.len() < t {
            return Err(Error::ShapeMismatch(format!(
                "sample has base {} and precision {}, expected base {b} and precision >= {t}",
                ds.base(),
                ds.len()
            )));
        }
        let d = ds.digit(t);
        counts[d as usize] += 1;
        // R_t = Σ_{r>t} D_r b^{-(r-t+1)} = (0.D_{t+1}...)/b
        let r = ds.digits()[t..].iter().rev().fold(0.0, |acc, &x| (f64::from(x) + acc) / bf) / bf;
        let v = f64::from(d) / bf + r;
        for j in 0..b {
            kappa[j as usize] += unit_phase(j, r);
            mean_z[j as usize] += unit_phase(j, v);
        }
    }
    let n = samples.len() as f64;
    for k in kappa.iter_mut().chain(mean_z.iter_mut()) {
        *k /= n;
    }
    let phi = (0..b)
        .map(|j| {
            if j == 0 {
                return Complex64::new(1.0, 0.0);
            }
            counts
                .iter()
                .enumerate()
                .map(|(d, &c)| {
                    let k = (u64::from(j) * d as u64) % u64::from(b);
                    unit_phase(1, k as f64 / bf) * (c as f64 / n)
                })
                .sum()
        })
        .collect();
    Ok(DigitLawDiagnostics { scale: t, base: b, samples: samples.len(), phi, kappa, mean_z, counts })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() < tol
    }

    fn stream(b: u32, d: &[u8]) -> DigitStream {
        DigitStream::new(b, d.to_vec()).unwrap()
    }

    #[test]
    fn component_examples() {
        let zeros = stream(10, &[0; 6]);
        for j in 1..10 {
            for t in 1..=6 {
                assert_eq!(harmonic_component(&zeros, j, t).unwrap(), Complex64::new(1.0, 0.0));
            }
        }
        let z = harmonic_component(&stream(2, &[1]), 1, 1).unwrap();
        assert!(close(z, Complex64::new(-1.0, 0.0), 1e-15));
        let z = harmonic_component(&stream(10, &[2, 5]), 1, 1).unwrap();
        assert!(close(z, Complex64::new(0.0, 1.0), 1e-15));
    }

    #[test]
    fn component_index_errors() {
        let ds = stream(10, &[1, 2, 3]);
        assert!(matches!(harmonic_component(&ds, 0, 1), Err(Error::IndexOutOfRange { name: "j", .. })));
        assert!(matches!(harmonic_component(&ds, 10, 1), Err(Error::IndexOutOfRange { name: "j", .. })));
        assert!(matches!(harmonic_component(&ds, 1, 0), Err(Error::IndexOutOfRange { name: "t", .. })));
        assert!(matches!(harmonic_component(&ds, 1, 4), Err(Error::IndexOutOfRange { name: "t", .. })));
    }

    #[test]
    fn averages_examples() {
        let hs = harmonic_averages(&stream(10, &[0; 4]), false);
        assert!(hs.zbar().iter().all(|z| *z == Complex64::new(1.0, 0.0)));

        let hs = harmonic_averages(&stream(2, &[1, 1]), false);
        let expected = (unit_phase(1, 0.75) + unit_phase(1, 0.5)) / 2.0;
        assert!(close(hs.zbar()[0], expected, 1e-15));

        let hs = harmonic_averages(&stream(3, &[0, 0]), false);
        assert_eq!(hs.zbar(), &[Complex64::new(1.0, 0.0); 2]);
    }

    #[test]
    fn statistic_examples() {
        let hs = harmonic_averages(&stream(10, &[0; 15]), false);
        assert_eq!(lacunary_statistic(&hs), 270.0);
        let hs = harmonic_averages(&stream(2, &[1, 0]), false);
        assert!(lacunary_statistic(&hs).abs() < 1e-28);
    }

    #[test]
    fn test_examples() {
        let report = lacunary_test(&stream(2, &[1, 0]));
        assert!((report.p_value - 1.0).abs() < 1e-12);
        assert_eq!(report.null_law, NullLaw::ChiSquare { df: 2 });
        assert_eq!(report.calibration, Calibration::Asymptotic);
        let report = lacunary_test(&stream(10, &[0; 10]));
        assert_eq!(report.statistic, 180.0);
        assert!(report.p_value < 1e-25);
    }

    #[test]
    fn partials_end_at_full_average() {
        let ds = stream(10, &[3, 1, 4, 1, 5, 9, 2, 6, 5, 3, 5, 8]);
        let hs = harmonic_averages(&ds, true);
        assert_eq!(hs.partial(ds.len()).unwrap(), hs.zbar());
        for t in 2..=ds.len() {
            let cur = hs.partial(t).unwrap();
            let prev = hs.partial(t - 1).unwrap();
            for (c, p) in cur.iter().zip(prev) {
                let single = c * t as f64 - p * (t - 1) as f64;
                assert!((single.norm() - 1.0).abs() < 1e-12);
            }
        }
        let no = harmonic_averages(&ds, false);
        assert!(matches!(no.partial(1), Err(Error::MissingPartials)));
        assert!(matches!(fourier_reconstruction(&no, Some(1)), Err(Error::MissingPartials)));
    }

    #[test]
    fn reconstruction_examples() {
        // a stream whose averages all vanish reconstructs the uniform law
        let hs = harmonic_averages(&stream(2, &[1, 0]), false);
        for p in fourier_reconstruction(&hs, None).unwrap() {
            assert!(close(p, Complex64::new(0.5, 0.0), 1e-15));
        }
        let hs = harmonic_averages(&stream(10, &[0; 5]), false);
        let p = fourier_reconstruction(&hs, None).unwrap();
        assert!(close(p[0], Complex64::new(1.0, 0.0), 1e-14));
        for pd in &p[1..] {
            assert!(pd.norm() < 1e-14);
        }
        let total: Complex64 = p.iter().sum();
        assert!(close(total, Complex64::new(1.0, 0.0), 1e-14));
    }

    #[test]
    fn imbalance_examples() {
        let ds = stream(10, &[0; 3]);
        let traj = cumulative_imbalance(&ds);
        assert_eq!(traj.len(), 3);
        assert!((traj[0][0] - 0.9).abs() < 1e-14);
        // m = 1 is a single term
        let ds = stream(10, &[7]);
        let hs = harmonic_averages(&ds, true);
        let p = fourier_reconstruction(&hs, Some(1)).unwrap();
        let traj = cumulative_imbalance(&ds);
        for d in 0..10 {
            assert!((traj[0][d] - (p[d] - 0.1).norm()).abs() < 1e-15);
        }
        // b = 2, digits [1, 0]: Z̄^{(1)} = -1 so p̂^{(1)} = (0, 1); Z̄^{(2)} = 0 so p̂^{(2)} uniform
        let traj = cumulative_imbalance(&stream(2, &[1, 0]));
        assert!((traj[0][0] - 0.5).abs() < 1e-15);
        assert!((traj[1][0] - 2f64.sqrt() * 0.5).abs() < 1e-15);
        assert!((imbalance_reference(10) - 0.09).abs() < 1e-16);
    }

    #[test]
    fn diagnostics_examples() {
        let samples: Vec<_> = (0..10).map(|k| stream(10, &[k as u8, 0, (9 - k) as u8])).collect();
        // uniform histogram at scale 1
        let diag = digit_law_diagnostics(&samples, 1).unwrap();
        assert_eq!(diag.phi[0], Complex64::new(1.0, 0.0));
        for phi in &diag.phi[1..] {
            assert!(phi.norm() < 1e-14);
        }
        // all D_2 = 0
        let diag = digit_law_diagnostics(&samples, 2).unwrap();
        for phi in &diag.phi {
            assert!(close(*phi, Complex64::new(1.0, 0.0), 1e-14));
        }
        for (a, b) in diag.inverted_probabilities().iter().zip(diag.empirical_probabilities()) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!(matches!(digit_law_diagnostics(&[], 1), Err(Error::EmptySample)));
        assert!(matches!(digit_law_diagnostics(&samples, 4), Err(Error::IndexOutOfRange { .. })));
    }

    #[test]
    fn mc_calibration_is_a_valid_p_value() {
        let ds = stream(10, &[0; 12]);
        let report = lacunary_test_mc(&ds, 199, 7);
        assert_eq!(report.p_value, 1.0 / 200.0);
        assert_eq!(report.calibration, Calibration::MonteCarlo { replicates: 199 });
    }
}
