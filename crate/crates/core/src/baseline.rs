//! Classical comparison tests on the digit sequence itself: Pearson's
//! chi-square on marginal counts, the adjacent-repeat count, and a
//! Kolmogorov-Smirnov test on the digit midpoints.

use std::collections::BTreeMap;

use num_rational::Ratio;

use crate::digits::DigitStream;
use crate::error::{Error, Result};
use crate::report::{Calibration, Method, TestReport};
use crate::special::{binom_sf, chi2_sf, kolmogorov_sf, NullLaw};

/// Pearson statistic `Σ_d (N_d - m/b)² / (m/b)` against `χ²_{b-1}`.
pub fn pearson_digit_test(ds: &DigitStream) -> TestReport {
    let b = ds.base();
    let m = ds.len() as f64;
    let expected = m / b as f64;
    let statistic = ds.counts().iter().map(|&n| (n as f64 - expected).powi(2) / expected).sum::<f64>();
    let df = b - 1;
    let mut aux = BTreeMap::new();
    aux.insert("m".to_string(), m);
    TestReport {
        method: Method::Pearson,
        statistic,
        null_law: NullLaw::ChiSquare { df },
        p_value: chi2_sf(statistic, df),
        calibration: Calibration::Asymptotic,
        aux,
        note: None,
    }
}

/// Number of adjacent matches `R = #{t >= 2 : D_t = D_{t-1}}` with the exact
/// upper tail `P(Bin(m - 1, 1/b) >= R)`.
pub fn repeat_rate_test(ds: &DigitStream) -> Result<TestReport> {
    let m = ds.len();
    if m < 2 {
        return Err(Error::Precision { min: 2, got: m });
    }
    let d = ds.digits();
    let r = d.windows(2).filter(|w| w[0] == w[1]).count() as u64;
    let n = (m - 1) as u64;
    let b = ds.base();
    let mut aux = BTreeMap::new();
    aux.insert("repeats".to_string(), r as f64);
    aux.insert("pairs".to_string(), n as f64);
    Ok(TestReport {
        method: Method::RepeatRate,
        statistic: r as f64,
        null_law: NullLaw::Binomial { n, p: 1.0 / b as f64 },
        p_value: binom_sf(r, n, Ratio::new(1, b as u64)),
        calibration: Calibration::Exact,
        aux,
        note: None,
    })
}

/// Two-sided K-S distance between the empirical law of `(D_t + 1/2)/b` and
/// Unif(0, 1), with the asymptotic Kolmogorov p-value at `√m D`.
pub fn ks_digit_test(ds: &DigitStream) -> TestReport {
    let b = ds.base() as f64;
    let m = ds.len();
    let mut points: Vec<f64> = ds.digits().iter().map(|&d| (d as f64 + 0.5) / b).collect();
    points.sort_by(f64::total_cmp);
    let mf = m as f64;
    let mut d_plus = 0f64;
    let mut d_minus = 0f64;
    for (i, &x) in points.iter().enumerate() {
        d_plus = d_plus.max((i + 1) as f64 / mf - x);
        d_minus = d_minus.max(x - i as f64 / mf);
    }
    let distance = d_plus.max(d_minus);
    let mut aux = BTreeMap::new();
    aux.insert("d_plus".to_string(), d_plus);
    aux.insert("d_minus".to_string(), d_minus);
    aux.insert("sqrt_m_d".to_string(), mf.sqrt() * distance);
    TestReport {
        method: Method::Ks,
        statistic: distance,
        null_law: NullLaw::Kolmogorov,
        p_value: kolmogorov_sf(mf.sqrt() * distance),
        calibration: Calibration::Asymptotic,
        aux,
        note: Some("midpoint embedding (D + 1/2)/b; asymptotic p-value, conservative for discrete data".to_string()),
    }
}

/// Runs the requested method; the lacunary test uses its asymptotic calibration.
pub fn run_test(method: Method, ds: &DigitStream) -> Result<TestReport> {
    match method {
        Method::Lacunary => Ok(crate::harmonic::lacunary_test(ds)),
        Method::Pearson => Ok(pearson_digit_test(ds)),
        Method::RepeatRate => repeat_rate_test(ds),
        Method::Ks => Ok(ks_digit_test(ds)),
    }
}
