//! Monte Carlo studies: null calibration of `T`, rejection-rate tables under
//! the tilt models, and the noncentral limit check.
//!
//! Every unit of work (a replicate under the null, a Gibbs chain under an
//! alternative) draws from its own ChaCha stream keyed by the seed, a hash of
//! the cell description and the unit index. Results therefore do not depend
//! on the rayon pool size or on which other cells are in the same run.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baseline::run_test;
use crate::digits::DigitStream;
use crate::error::{Error, Result};
use crate::gibbs::{GibbsConfig, GibbsSampler};
use crate::harmonic::{harmonic_averages, lacunary_df, lacunary_statistic};
use crate::report::Method;
use crate::rng::{DigitRng, RngSpec};
use crate::special::{chi2_cdf, noncentral_chi2_cdf};
use crate::tilt::{build_tilt, theoretical_noncentrality, ModelKind, ModelSpec, TiltSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub base: u32,
    pub m_values: Vec<usize>,
    pub taus: Vec<f64>,
    pub models: Vec<ModelKind>,
    pub tests: Vec<Method>,
    pub alpha: f64,
    /// Retained draws (alternatives) or independent streams (null) per cell.
    pub replicates: usize,
    pub burn_in: usize,
    pub thin: usize,
    /// Independent Gibbs chains per cell; draws are split evenly.
    pub chains: usize,
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            base: 10,
            m_values: vec![15, 50, 100],
            taus: vec![0.0, 1.0, 2.0, 3.0],
            models: ModelKind::table_models(),
            tests: Method::ALL.to_vec(),
            alpha: 0.05,
            replicates: 2000,
            burn_in: 1000,
            thin: 1,
            chains: 1,
            seed: 20_240_601,
        }
    }
}

impl ExperimentConfig {
    /// Full power table: 2000 retained draws per cell (long running).
    pub fn table() -> Self {
        ExperimentConfig::default()
    }

    /// Power table at 500 draws per cell.
    pub fn quick() -> Self {
        ExperimentConfig { replicates: 500, ..ExperimentConfig::default() }
    }

    /// Null-density study at 1000 draws for `m ∈ {15, 25, 50, 100}`.
    pub fn figure() -> Self {
        ExperimentConfig {
            m_values: vec![15, 25, 50, 100],
            taus: vec![0.0, 2.0],
            models: vec![ModelKind::PhaseShift],
            tests: vec![Method::Lacunary],
            replicates: 1000,
            ..ExperimentConfig::default()
        }
    }

    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "table" => Ok(Self::table()),
            "quick" => Ok(Self::quick()),
            "figure" => Ok(Self::figure()),
            other => Err(Error::InvalidArgument(format!("unknown preset `{other}` (table, quick, figure)"))),
        }
    }

    pub fn validate(&self) -> Result<()> {
        crate::digits::check_base(self.base)?;
        if self.replicates == 0 {
            return Err(Error::InvalidArgument("replicates must be at least 1".into()));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidArgument(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        if let Some(&m) = self.m_values.iter().find(|&&m| m < 2) {
            return Err(Error::InvalidArgument(format!("precision m = {m} is below 2")));
        }
        if self.m_values.is_empty() || self.taus.is_empty() || self.models.is_empty() || self.tests.is_empty() {
            return Err(Error::InvalidArgument("empty experiment grid".into()));
        }
        if self.thin == 0 || self.chains == 0 {
            return Err(Error::InvalidArgument("thin and chains must be at least 1".into()));
        }
        if self.chains > self.replicates {
            return Err(Error::InvalidArgument("more chains than draws".into()));
        }
        if let Some(t) = self.taus.iter().find(|t| !(t.is_finite() && **t >= 0.0)) {
            return Err(Error::InvalidArgument(format!("tau = {t} is not a finite non-negative number")));
        }
        Ok(())
    }
}

/// 32-bit FNV-1a, used to key RNG streams by cell description.
fn stream_group(key: &str) -> u32 {
    key.bytes().fold(0x811c_9dc5u32, |h, byte| (h ^ u32::from(byte)).wrapping_mul(0x0100_0193))
}

fn null_streams(base: u32, m: usize, replicates: usize, seed: u64, key: &str) -> Vec<DigitStream> {
    let group = stream_group(key);
    (0..replicates)
        .into_par_iter()
        .map(|r| DigitRng::new(RngSpec::task(seed, group, r as u32)).digit_stream(base, m))
        .collect()
}

/// Sup-distance between the empirical CDF of `samples` and `cdf`.
pub fn sup_distance(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NullSummary {
    pub base: u32,
    pub m: usize,
    pub replicates: usize,
    pub alpha: f64,
    pub df: u32,
    /// Fraction of replicates with asymptotic p-value below `alpha`.
    pub empirical_size: f64,
    pub size_se: f64,
    pub sup_distance: f64,
    pub mean: f64,
    /// Too few replicates for the summary to mean anything.
    pub degenerate: bool,
    #[serde(skip)]
    pub samples: Vec<f64>,
}

/// Simulates `T` under i.i.d. uniform digits for each precision in the config.
pub fn null_distribution_experiment(cfg: &ExperimentConfig) -> Result<Vec<NullSummary>> {
    cfg.validate()?;
    let df = lacunary_df(cfg.base);
    let crit = crate::special::chi2_isf(cfg.alpha, df)?;
    Ok(cfg
        .m_values
        .iter()
        .map(|&m| {
            let key = format!("null|b={}|m={m}", cfg.base);
            let samples: Vec<f64> = null_streams(cfg.base, m, cfg.replicates, cfg.seed, &key)
                .par_iter()
                .map(|ds| lacunary_statistic(&harmonic_averages(ds, false)))
                .collect();
            let n = samples.len() as f64;
            let size = samples.iter().filter(|&&t| t > crit).count() as f64 / n;
            NullSummary {
                base: cfg.base,
                m,
                replicates: cfg.replicates,
                alpha: cfg.alpha,
                df,
                empirical_size: size,
                size_se: (size * (1.0 - size) / n).sqrt(),
                sup_distance: sup_distance(&samples, |x| chi2_cdf(x, df)),
                mean: samples.iter().sum::<f64>() / n,
                degenerate: cfg.replicates < 2,
                samples,
            }
        })
        .collect())
}

/// CSV `m,replicate,T,chi2_cdf` with one line per simulated statistic.
pub fn write_null_samples_csv<W: Write>(summaries: &[NullSummary], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["m", "replicate", "T", "chi2_cdf"])?;
    for s in summaries {
        for (r, &t) in s.samples.iter().enumerate() {
            w.write_record([s.m.to_string(), r.to_string(), format!("{t:.12e}"), format!("{:.12e}", chi2_cdf(t, s.df))])?;
        }
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerRow {
    /// Table label of the model (`i`..`iv`).
    pub model: String,
    pub model_name: String,
    pub test: Method,
    pub m: usize,
    pub tau: f64,
    pub rejections: usize,
    pub replicates: usize,
    pub rate: f64,
    /// `√(rate (1 - rate) / replicates)`.
    pub se: f64,
}

/// Draws for one cell: uniform streams at `τ = 0`, otherwise Gibbs draws
/// split over `cfg.chains` chains.
pub fn cell_draws(cfg: &ExperimentConfig, model: &ModelKind, m: usize, tau: f64) -> Result<Vec<DigitStream>> {
    let spec = ModelSpec::new(model.clone(), tau);
    let key = format!("power|b={}|{}|m={m}|tau={tau}", cfg.base, kv_key(&spec));
    if tau == 0.0 {
        return Ok(null_streams(cfg.base, m, cfg.replicates, cfg.seed, &key));
    }
    let tilt = build_tilt(&spec, cfg.base, m)?;
    chain_draws(&tilt, cfg, &key)
}

fn kv_key(spec: &ModelSpec) -> String {
    let mut kv = spec.to_kv();
    kv.remove("tau");
    kv.iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join(";")
}

fn chain_draws(tilt: &TiltSpec, cfg: &ExperimentConfig, key: &str) -> Result<Vec<DigitStream>> {
    let group = stream_group(key);
    let per = cfg.replicates / cfg.chains;
    let extra = cfg.replicates % cfg.chains;
    let chunks: Vec<Result<Vec<DigitStream>>> = (0..cfg.chains)
        .into_par_iter()
        .map(|c| {
            let n_draws = per + usize::from(c < extra);
            let gc = GibbsConfig { n_draws, burn_in: cfg.burn_in, thin: cfg.thin };
            GibbsSampler::new(tilt, RngSpec::task(cfg.seed, group, c as u32)).run(&gc)
        })
        .collect();
    let mut draws = Vec::with_capacity(cfg.replicates);
    for chunk in chunks {
        draws.extend(chunk?);
    }
    Ok(draws)
}

fn rejection_rows(cfg: &ExperimentConfig, model: &ModelKind, m: usize, tau: f64, draws: &[DigitStream]) -> Result<Vec<PowerRow>> {
    let counts: Vec<Vec<bool>> = draws
        .par_iter()
        .map(|ds| cfg.tests.iter().map(|&t| run_test(t, ds).map(|r| r.rejects(cfg.alpha))).collect::<Result<Vec<_>>>())
        .collect::<Result<_>>()?;
    let n = draws.len();
    Ok(cfg
        .tests
        .iter()
        .enumerate()
        .map(|(k, &test)| {
            let rejections = counts.iter().filter(|row| row[k]).count();
            let rate = rejections as f64 / n as f64;
            PowerRow {
                model: model.table_label().to_string(),
                model_name: model.name().to_string(),
                test,
                m,
                tau,
                rejections,
                replicates: n,
                rate,
                se: (rate * (1.0 - rate) / n as f64).sqrt(),
            }
        })
        .collect())
}

/// Rejection rates for one (model, m, τ) cell, one row per test.
pub fn power_cell(cfg: &ExperimentConfig, model: &ModelKind, m: usize, tau: f64) -> Result<Vec<PowerRow>> {
    cfg.validate()?;
    let draws = cell_draws(cfg, model, m, tau)?;
    rejection_rows(cfg, model, m, tau, &draws)
}

/// Full grid, ordered by model, then `m`, then `τ`, then test.
pub fn power_experiment(cfg: &ExperimentConfig) -> Result<Vec<PowerRow>> {
    cfg.validate()?;
    let cells: Vec<(&ModelKind, usize, f64)> = cfg
        .models
        .iter()
        .flat_map(|model| cfg.m_values.iter().flat_map(move |&m| cfg.taus.iter().map(move |&tau| (model, m, tau))))
        .collect();
    let rows: Vec<Result<Vec<PowerRow>>> = cells.par_iter().map(|&(model, m, tau)| power_cell(cfg, model, m, tau)).collect();
    let mut out = Vec::new();
    for r in rows {
        out.extend(r?);
    }
    Ok(out)
}

pub fn write_power_csv<W: Write>(rows: &[PowerRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["model", "model_name", "test", "m", "tau", "rejections", "replicates", "rate", "se"])?;
    for r in rows {
        w.write_record([
            r.model.clone(),
            r.model_name.clone(),
            r.test.name().to_string(),
            r.m.to_string(),
            r.tau.to_string(),
            r.rejections.to_string(),
            r.replicates.to_string(),
            format!("{:.6}", r.rate),
            format!("{:.6}", r.se),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoncentralityReport {
    pub base: u32,
    pub m: usize,
    pub df: u32,
    pub lambda: f64,
    pub target_mean: f64,
    pub empirical_mean: f64,
    /// Batch-means standard error of the empirical mean.
    pub mean_se: f64,
    pub sup_distance: f64,
    pub draws: usize,
    #[serde(skip)]
    pub samples: Vec<f64>,
}

/// Compares `T` under Gibbs draws from `tilt` with the noncentral
/// `χ²_{2(b-1)}(λ)` limit, `λ` from the scale-averaged coefficients.
pub fn noncentrality_check(tilt: &TiltSpec, cfg: &ExperimentConfig) -> Result<NoncentralityReport> {
    if cfg.replicates == 0 || cfg.chains == 0 || cfg.thin == 0 || cfg.chains > cfg.replicates {
        return Err(Error::InvalidArgument("invalid draw settings".into()));
    }
    let key = format!("noncentrality|{}|b={}|m={}", tilt.label, tilt.base(), tilt.precision());
    let draws = if tilt.is_null() {
        null_streams(tilt.base(), tilt.precision(), cfg.replicates, cfg.seed, &key)
    } else {
        chain_draws(tilt, cfg, &key)?
    };
    let samples: Vec<f64> = draws.par_iter().map(|ds| lacunary_statistic(&harmonic_averages(ds, false))).collect();
    let df = lacunary_df(tilt.base());
    let lambda = theoretical_noncentrality(tilt);
    let n = samples.len();
    let mean = samples.iter().sum::<f64>() / n as f64;
    Ok(NoncentralityReport {
        base: tilt.base(),
        m: tilt.precision(),
        df,
        lambda,
        target_mean: f64::from(df) + lambda,
        empirical_mean: mean,
        mean_se: batch_means_se(&samples),
        sup_distance: sup_distance(&samples, |x| noncentral_chi2_cdf(x, df, lambda)),
        draws: n,
        samples,
    })
}

/// Standard error of a chain mean from `⌊√n⌋` non-overlapping batches.
pub fn batch_means_se(samples: &[f64]) -> f64 {
    let n = samples.len();
    let size = ((n as f64).sqrt() as usize).max(1);
    let batches = n / size;
    if batches < 2 {
        return f64::NAN;
    }
    let means: Vec<f64> = (0..batches).map(|k| samples[k * size..(k + 1) * size].iter().sum::<f64>() / size as f64).collect();
    let grand = means.iter().sum::<f64>() / batches as f64;
    let var = means.iter().map(|x| (x - grand).powi(2)).sum::<f64>() / (batches - 1) as f64;
    (var / batches as f64).sqrt()
}
