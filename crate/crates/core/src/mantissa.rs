//! Screening of individual amounts through the digits of their base-10 log
//! mantissa `frac(log10 X)`.
//!
//! Amounts stay decimal text throughout. The mantissa only depends on the
//! significant digits of `X`, so it is computed from `y = X / 10^k ∈ [1, 10)`
//! and scaling by powers of ten cannot change a single digit.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baseline::pearson_digit_test;
use crate::bigfixed::{ln10, pow10, BigFixed};
use crate::digits::DigitStream;
use crate::error::{Error, Result};
use crate::harmonic::{cumulative_imbalance, imbalance_reference, lacunary_test};
use crate::report::TestReport;
use crate::rng::{DigitRng, RngSpec};

pub const DEFAULT_MANTISSA_DIGITS: usize = 10;

/// Seed of the bundled `data/fixtures/rounded_amounts.csv`.
pub const FIXTURE_SEED: u64 = 20_240_601;

/// The bundled fixture text.
pub const ROUNDED_AMOUNTS_CSV: &str = include_str!("../data/fixtures/rounded_amounts.csv");

/// Digits beyond `m` that `working_precision` adds by default.
pub const DEFAULT_EXTRA_PRECISION: usize = 30;

/// `(y, k)` with `X = y · 10^k` and `y ∈ [1, 10)`, exactly.
fn normalise(amount: &str) -> Result<(BigFixed, i64)> {
    let x = BigFixed::parse(amount)?;
    if x.is_negative() || x.is_zero() {
        return Err(Error::InvalidArgument(format!("amount `{}` is not positive", amount.trim())));
    }
    let digits = x.raw().to_string();
    // y = mag / 10^{len-1}
    let y = BigFixed::from_raw(x.raw().clone(), digits.len() - 1);
    let k = digits.len() as i64 - 1 - x.scale() as i64;
    Ok((y, k))
}

/// First `m` digits of `frac(log10 X)` for a decimal amount `X > 0`.
///
/// The logarithm is evaluated with `working_precision` digits (default
/// `m + 30`); a mantissa within `10^-(working_precision - m - 5)` of a digit
/// boundary is rejected rather than truncated. Exact powers of ten have an
/// exactly zero mantissa.
pub fn mantissa_digits(amount: &str, m: usize, working_precision: Option<usize>) -> Result<DigitStream> {
    if m == 0 {
        return Err(Error::Precision { min: 1, got: 0 });
    }
    let wp = working_precision.unwrap_or(m + DEFAULT_EXTRA_PRECISION);
    if wp < m + 6 {
        return Err(Error::Precision { min: m + 6, got: wp });
    }
    let (y, _) = normalise(amount)?;
    if *y.raw() == pow10(y.scale()) {
        return DigitStream::new(10, vec![0; m]);
    }
    // log10 y is irrational for any other rational y, so it is never exactly
    // on a boundary; a few guard digits absorb the series truncation.
    let work = wp + 10;
    let log10 = y.ln(work)?.div(&ln10(work), work)?;
    let shifted = log10.raw(); // value · 10^work
    let unit = pow10(work - m);
    let head = shifted / &unit;
    let rest = shifted - &head * &unit;
    let band = pow10(work - (wp - m - 5));
    if rest < band || &unit - &rest <= band {
        return Err(Error::BoundaryProximity { step: m, guard: wp - m });
    }
    let text = format!("{:0>width$}", head.to_string(), width = m);
    DigitStream::from_digit_text(&text, 10, Some(m))
}

/// Column mapping and test settings for a scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanOptions {
    pub id_column: String,
    pub amount_column: String,
    pub m: usize,
    pub alphas: Vec<f64>,
    pub working_precision: Option<usize>,
}

impl Default for ScanOptions {
    fn default() -> Self {
        ScanOptions {
            id_column: "id".to_string(),
            amount_column: "amount".to_string(),
            m: DEFAULT_MANTISSA_DIGITS,
            alphas: vec![0.05, 0.01],
            working_precision: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaFlags {
    pub alpha: f64,
    pub lacunary: bool,
    pub pearson: bool,
    /// Lacunary rejects while Pearson does not.
    pub discordant: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AmountRecord {
    pub id: String,
    pub amount: String,
    pub mantissa: DigitStream,
    pub lacunary: TestReport,
    pub pearson: TestReport,
    pub flags: Vec<AlphaFlags>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowError {
    /// 1-based data row (header excluded).
    pub row: usize,
    pub id: Option<String>,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanSummary {
    pub options: ScanOptions,
    /// Sorted by lacunary statistic, largest first; ties by id.
    pub records: Vec<AmountRecord>,
    pub errors: Vec<RowError>,
}

impl ScanSummary {
    /// Ids flagged by the lacunary test but not by Pearson at `alpha`.
    pub fn discordance(&self, alpha: f64) -> Vec<&str> {
        self.records
            .iter()
            .filter(|r| r.flags.iter().any(|f| f.alpha == alpha && f.discordant))
            .map(|r| r.id.as_str())
            .collect()
    }

    pub fn flagged(&self, alpha: f64) -> Vec<&str> {
        self.records
            .iter()
            .filter(|r| r.flags.iter().any(|f| f.alpha == alpha && f.lacunary))
            .map(|r| r.id.as_str())
            .collect()
    }

    pub fn record(&self, id: &str) -> Result<&AmountRecord> {
        self.records.iter().find(|r| r.id == id).ok_or_else(|| Error::UnknownRecord(id.to_string()))
    }

    /// One line per record: id, amount, digits, both statistics and p-values,
    /// then three flag columns per alpha level.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["id", "amount", "mantissa_digits", "lacunary_t", "lacunary_p", "pearson_x2", "pearson_p"]
            .into_iter()
            .map(String::from)
            .collect::<Vec<_>>();
        for a in &self.options.alphas {
            header.push(format!("lacunary_reject_{a}"));
            header.push(format!("pearson_reject_{a}"));
            header.push(format!("discordant_{a}"));
        }
        w.write_record(&header)?;
        for r in &self.records {
            let mut row = vec![
                r.id.clone(),
                r.amount.clone(),
                r.mantissa.to_digit_string(),
                format!("{:.10}", r.lacunary.statistic),
                format!("{:.6e}", r.lacunary.p_value),
                format!("{:.10}", r.pearson.statistic),
                format!("{:.6e}", r.pearson.p_value),
            ];
            for f in &r.flags {
                row.push(u8::from(f.lacunary).to_string());
                row.push(u8::from(f.pearson).to_string());
                row.push(u8::from(f.discordant).to_string());
            }
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Scores one amount.
pub fn score_amount(id: &str, amount: &str, opts: &ScanOptions) -> Result<AmountRecord> {
    let mantissa = mantissa_digits(amount, opts.m, opts.working_precision)?;
    let lacunary = lacunary_test(&mantissa);
    let pearson = pearson_digit_test(&mantissa);
    let flags = opts
        .alphas
        .iter()
        .map(|&alpha| {
            let (l, p) = (lacunary.rejects(alpha), pearson.rejects(alpha));
            AlphaFlags { alpha, lacunary: l, pearson: p, discordant: l && !p }
        })
        .collect();
    Ok(AmountRecord { id: id.to_string(), amount: amount.trim().to_string(), mantissa, lacunary, pearson, flags })
}

/// Scans a CSV with a header row. Rows that cannot be read or scored are
/// listed in `errors` and skipped.
pub fn scan_dataset<R: Read>(input: R, opts: &ScanOptions) -> Result<ScanSummary> {
    if let Some(a) = opts.alphas.iter().find(|a| !(**a > 0.0 && **a < 1.0)) {
        return Err(Error::InvalidArgument(format!("alpha {a} is outside (0, 1)")));
    }
    let mut reader = csv::ReaderBuilder::new().flexible(true).trim(csv::Trim::All).from_reader(input);
    let headers = reader.headers()?.clone();
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::InvalidArgument(format!("column `{name}` not found in header {:?}", headers.iter().collect::<Vec<_>>())))
    };
    let id_col = column(&opts.id_column)?;
    let amount_col = column(&opts.amount_column)?;
    let mut rows = Vec::new();
    let mut errors = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let row = i + 1;
        match rec {
            Ok(rec) => match (rec.get(id_col), rec.get(amount_col)) {
                (Some(id), Some(amount)) => rows.push((row, id.to_string(), amount.to_string())),
                (id, _) => errors.push(RowError { row, id: id.map(str::to_string), message: "missing column".into() }),
            },
            Err(e) => errors.push(RowError { row, id: None, message: e.to_string() }),
        }
    }
    let scored: Vec<(usize, String, Result<AmountRecord>)> =
        rows.into_par_iter().map(|(row, id, amount)| { let r = score_amount(&id, &amount, opts); (row, id, r) }).collect();
    let mut records = Vec::with_capacity(scored.len());
    for (row, id, r) in scored {
        match r {
            Ok(rec) => records.push(rec),
            Err(e) => errors.push(RowError { row, id: Some(id), message: e.to_string() }),
        }
    }
    errors.sort_by_key(|e| e.row);
    records.sort_by(|a, b| b.lacunary.statistic.total_cmp(&a.lacunary.statistic).then_with(|| a.id.cmp(&b.id)));
    Ok(ScanSummary { options: opts.clone(), records, errors })
}

/// Cumulative-imbalance trajectories of the given records as CSV lines
/// `id,t,d,value,reference`.
pub fn export_trajectories<W: Write>(summary: &ScanSummary, ids: &[&str], out: W) -> Result<()> {
    let selected = ids.iter().map(|id| summary.record(id)).collect::<Result<Vec<_>>>()?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["id", "t", "d", "value", "reference"])?;
    for rec in selected {
        let reference = imbalance_reference(rec.mantissa.base());
        for (t, row) in cumulative_imbalance(&rec.mantissa).iter().enumerate() {
            for (d, v) in row.iter().enumerate() {
                w.write_record([rec.id.clone(), (t + 1).to_string(), d.to_string(), format!("{v:.12e}"), reference.to_string()])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// Decimal rendering of `10^{k + u}` with `sig` significant digits
/// (truncated), for `u ∈ [0, 1)` given as a fixed-point value.
fn power_of_ten_text(k: u32, u: &BigFixed, sig: usize) -> Result<String> {
    let work = sig + 20;
    let y = u.rescale(work).mul(&ln10(work)).exp(work)?; // in [1, 10)
    let digits = y.scaled_floor(sig - 1).to_string();
    let int_len = 1 + k as usize;
    Ok(if int_len >= digits.len() {
        format!("{digits}{}", "0".repeat(int_len - digits.len()))
    } else {
        format!("{}.{}", &digits[..int_len], &digits[int_len..])
    })
}

/// Amounts `X = 10^{E + U}` with `U` uniform (so `frac(log10 X)` is uniform
/// up to the rendering precision) and `E` uniform on `0..max_exponent`.
/// Rendered with 24 significant digits, far beyond a 10-digit mantissa.
pub fn log_uniform_amounts(n: usize, max_exponent: u32, seed: u64) -> Result<Vec<String>> {
    (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = DigitRng::new(RngSpec::task(seed, 0x4c4f_4755, i as u32));
            let e = rng.below(max_exponent.max(1));
            // 30 uniform decimal digits for U
            let u: String = (0..30).map(|_| char::from(b'0' + rng.below(10) as u8)).collect();
            power_of_ten_text(e, &BigFixed::parse(&format!("0.{u}"))?, 24)
        })
        .collect()
}

/// Rows `(id, amount, kind)` of the bundled fixture: cent amounts whose
/// mantissa is uniform (`kind = uniform`), and every sixteenth row a planted
/// round amount a few cents above a power of ten (`kind = planted`, e.g.
/// `10004.37`), whose mantissa starts with a run of zeros.
pub fn rounded_amounts_fixture(seed: u64) -> Result<Vec<[String; 3]>> {
    const TOTAL: usize = 200;
    let mut rng = DigitRng::new(RngSpec::new(seed, 0));
    let mut out = Vec::with_capacity(TOTAL);
    for i in 0..TOTAL {
        let id = format!("R{:04}", i + 1);
        if i % 16 == 7 {
            let k = 3 + rng.below(5);
            let cents = 1 + rng.below(999);
            let amount = format!("{}.{:02}", 10u64.pow(k) + u64::from(cents / 100), cents % 100);
            out.push([id, amount, "planted".to_string()]);
        } else {
            let e = 2 + rng.below(5);
            let u: String = (0..30).map(|_| char::from(b'0' + rng.below(10) as u8)).collect();
            let text = power_of_ten_text(e, &BigFixed::parse(&format!("0.{u}"))?, 24)?;
            out.push([id, cents_text(&text), "uniform".to_string()]);
        }
    }
    Ok(out)
}

/// Truncates a decimal rendering to two fractional digits.
fn cents_text(text: &str) -> String {
    match text.split_once('.') {
        Some((i, f)) => format!("{i}.{:0<2}", &f[..f.len().min(2)]),
        None => format!("{text}.00"),
    }
}

pub fn write_fixture_csv<W: Write>(rows: &[[String; 3]], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["id", "amount", "kind"])?;
    for row in rows {
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(())
}

/// Lacunary flag rates per alpha over a list of amounts.
pub fn flag_rates(amounts: &[String], opts: &ScanOptions) -> Result<BTreeMap<String, f64>> {
    let flags: Vec<Vec<bool>> = amounts
        .par_iter()
        .map(|a| score_amount("", a, opts).map(|r| r.flags.iter().map(|f| f.lacunary).collect()))
        .collect::<Result<_>>()?;
    let n = flags.len() as f64;
    Ok(opts
        .alphas
        .iter()
        .enumerate()
        .map(|(k, a)| (a.to_string(), flags.iter().filter(|f| f[k]).count() as f64 / n))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mantissa_examples() {
        assert_eq!(mantissa_digits("1000", 10, None).unwrap().digits(), &[0; 10]);
        assert_eq!(mantissa_digits("0.001", 10, None).unwrap().digits(), &[0; 10]);
        let two = mantissa_digits("2", 10, None).unwrap();
        assert_eq!(two.digits(), &[3, 0, 1, 0, 2, 9, 9, 9, 5, 6]);
        for scaled in ["20", "2000000", "0.2", "2.000", "0.0002"] {
            assert_eq!(mantissa_digits(scaled, 10, None).unwrap(), two);
        }
        assert!(mantissa_digits("0", 10, None).is_err());
        assert!(mantissa_digits("-5", 10, None).is_err());
        assert!(mantissa_digits("12x", 10, None).is_err());
    }

    #[test]
    fn doubling_precision_keeps_digits() {
        for a in ["67339", "275403000", "42820000", "3.14159", "999999.99"] {
            assert_eq!(mantissa_digits(a, 10, None).unwrap(), mantissa_digits(a, 10, Some(80)).unwrap());
        }
    }

    #[test]
    fn boundary_proximity_is_reported() {
        // 10^{0.5} truncated to 40 digits has mantissa 0.4999...9 with a long run of nines
        let root10 = "3.162277660168379332007335148397407821960";
        let err = mantissa_digits(root10, 10, Some(20)).unwrap_err();
        assert!(matches!(err, Error::BoundaryProximity { .. }));
    }

    #[test]
    fn power_rendering() {
        let u = BigFixed::parse("0.30102999566398119521373889472449302676818988146211").unwrap();
        assert!(power_of_ten_text(3, &u, 24).unwrap().starts_with("1999.99999999999999999"));
        assert_eq!(power_of_ten_text(0, &BigFixed::zero(5), 6).unwrap(), "1.00000");
    }

    #[test]
    fn scan_orders_and_reports_bad_rows() {
        let csv = "id,amount\na,1000\nb,2\nc,-4\nd,12.5\n";
        let s = scan_dataset(csv.as_bytes(), &ScanOptions::default()).unwrap();
        assert_eq!(s.records[0].id, "a");
        assert!((s.records[0].lacunary.statistic - 180.0).abs() < 1e-9);
        assert_eq!(s.errors.len(), 1);
        assert_eq!(s.errors[0].row, 3);
        assert!(s.records.windows(2).all(|w| w[0].lacunary.statistic >= w[1].lacunary.statistic));
        for a in [0.05, 0.01] {
            let flagged = s.flagged(a);
            assert!(s.discordance(a).iter().all(|id| flagged.contains(id)));
        }
        let mut out = Vec::new();
        assert!(matches!(export_trajectories(&s, &["zz"], &mut out), Err(Error::UnknownRecord(_))));
    }
}
