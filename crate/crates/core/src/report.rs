use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::special::NullLaw;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Lacunary,
    Pearson,
    RepeatRate,
    Ks,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Lacunary, Method::Pearson, Method::RepeatRate, Method::Ks];

    pub fn name(self) -> &'static str {
        match self {
            Method::Lacunary => "lacunary",
            Method::Pearson => "pearson",
            Method::RepeatRate => "repeat_rate",
            Method::Ks => "ks",
        }
    }

    /// Column label used in power tables.
    pub fn short(self) -> &'static str {
        match self {
            Method::Lacunary => "Lac",
            Method::Pearson => "chi2",
            Method::RepeatRate => "RR",
            Method::Ks => "K-S",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "lacunary" | "lac" => Ok(Method::Lacunary),
            "pearson" | "chi2" | "chisq" => Ok(Method::Pearson),
            "repeat_rate" | "rr" => Ok(Method::RepeatRate),
            "ks" | "k-s" => Ok(Method::Ks),
            other => Err(format!("unknown test `{other}`")),
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// How the p-value was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum Calibration {
    /// Limit law of the statistic (for the lacunary test: as `m -> ∞`).
    Asymptotic,
    /// Exact finite-sample law.
    Exact,
    /// Null simulation with matching base and precision.
    MonteCarlo { replicates: usize },
}

/// Outcome of one test applied to one digit stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    pub method: Method,
    pub statistic: f64,
    pub null_law: NullLaw,
    pub p_value: f64,
    pub calibration: Calibration,
    /// Method-specific extras, e.g. the repeat count `R` or the K-S distance.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub aux: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl TestReport {
    pub fn rejects(&self, alpha: f64) -> bool {
        self.p_value < alpha
    }
}
