//! Uniformity testing of digit expansions through lacunary harmonics
//! `exp(2πi j b^{t-1} U)`, together with classical baselines, digit-stream
//! generators, tilted alternatives with a Gibbs sampler, a Monte Carlo
//! harness and a mantissa scanner for recorded amounts.

pub mod baseline;
pub mod bigfixed;
pub mod constants;
pub mod digits;
pub mod error;
pub mod experiment;
pub mod generators;
pub mod gibbs;
pub mod harmonic;
pub mod mantissa;
pub mod report;
pub mod rng;
pub mod special;
pub mod tilt;

pub use baseline::{ks_digit_test, pearson_digit_test, repeat_rate_test, run_test};
pub use bigfixed::BigFixed;
pub use constants::{Constant, CONSTANTS};
pub use digits::DigitStream;
pub use error::{Error, Result};
pub use generators::{gauss_map_digits, logistic_digits, rotation_digits, uniform_digits, MapOptions, Real, Rotation};
pub use harmonic::{harmonic_averages, lacunary_statistic, lacunary_test, lacunary_test_mc, HarmonicSummary};
pub use report::{Calibration, Method, TestReport};
pub use rng::{DigitRng, RngSpec};
pub use experiment::{noncentrality_check, null_distribution_experiment, power_experiment, ExperimentConfig, PowerRow};
pub use gibbs::{gibbs_sample, GibbsConfig, GibbsSampler};
pub use tilt::{build_tilt, score_h, theoretical_noncentrality, ModelKind, ModelSpec, TiltSpec};
pub use mantissa::{export_trajectories, mantissa_digits, scan_dataset, ScanOptions, ScanSummary};
