use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use lacunary::experiment::*;
use lacunary::harmonic::lacunary_test;
use lacunary::mantissa::{export_trajectories, scan_dataset, ScanOptions};
use lacunary::special::noncentral_chi2_cdf;
use lacunary::tilt::{build_tilt, ModelKind, ModelSpec, TiltSpec};
use lacunary::{
    gauss_map_digits, lacunary_test_mc, logistic_digits, MapOptions, run_test, uniform_digits, BigFixed, Constant, DigitStream, Method, Real, RngSpec,
    Rotation, TestReport,
};
use serde::Serialize;
use serde_json::{json, Value};

use crate::cli::*;

/// What a command produced: files written and whether a test rejected.
pub struct Outcome {
    pub files: Vec<String>,
    pub effective: Value,
    pub rejected: bool,
}

struct Out {
    dir: PathBuf,
    files: Vec<String>,
}

impl Out {
    fn new(dir: PathBuf) -> Result<Self> {
        fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(Out { dir, files: Vec::new() })
    }

    fn create(&mut self, name: &str) -> Result<BufWriter<File>> {
        let path = self.dir.join(name);
        self.files.push(name.to_string());
        Ok(BufWriter::new(File::create(&path).with_context(|| format!("creating {}", path.display()))?))
    }

    fn json<T: Serialize + ?Sized>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut w = self.create(name)?;
        serde_json::to_writer_pretty(&mut w, value)?;
        writeln!(w)?;
        w.flush()?;
        Ok(())
    }
}

pub fn execute(cli: &Cli) -> Result<Outcome> {
    let g = &cli.global;
    if !(g.alpha > 0.0 && g.alpha < 1.0) {
        bail!(lacunary::Error::InvalidArgument(format!("--alpha must lie in (0, 1), got {}", g.alpha)));
    }
    let mut out = Out::new(g.out_dir())?;
    let (effective, rejected) = match &cli.command {
        Command::Test(a) => cmd_test(g, a, &mut out)?,
        Command::Generate(a) => (cmd_generate(g, a, &mut out)?, false),
        Command::Nulldist(a) => (cmd_nulldist(g, a, &mut out)?, false),
        Command::Power(a) => (cmd_power(g, a, &mut out)?, false),
        Command::Noncentrality(a) => (cmd_noncentrality(g, a, &mut out)?, false),
        Command::Scan(a) => (cmd_scan(g, a, &mut out)?, false),
        Command::Trajectory(a) => (cmd_trajectory(a, &mut out)?, false),
        Command::Rerun(_) => unreachable!("rerun is resolved before execution"),
    };
    Ok(Outcome { files: out.files, effective, rejected })
}

/// `manifest.json`: the resolved invocation (enough to rerun it), the
/// library-level configuration it mapped to, and the files written.
pub fn write_manifest(cli: &Cli, outcome: &Outcome) -> Result<()> {
    let manifest = json!({
        "tool": "lacunary",
        "version": env!("CARGO_PKG_VERSION"),
        "command": cli.command.name(),
        "rng": RngSpec::ALGORITHM,
        "invocation": cli,
        "effective": outcome.effective,
        "outputs": outcome.files,
    });
    let path = cli.global.out_dir().join("manifest.json");
    let text = serde_json::to_string_pretty(&manifest)? + "\n";
    fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

/// Rebuilds the invocation stored in a manifest. An explicit `--out-dir` or
/// `--threads` on the rerun replaces the recorded one.
pub fn load_manifest(path: &Path, current: &Global) -> Result<Cli> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let manifest: Value = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    let invocation = manifest.get("invocation").cloned().context("manifest has no `invocation`")?;
    let mut cli: Cli = serde_json::from_value(invocation).context("manifest invocation is not valid")?;
    if matches!(cli.command, Command::Rerun(_)) {
        bail!("manifest records a rerun");
    }
    if current.out_dir.is_some() {
        cli.global.out_dir = current.out_dir.clone();
    }
    if current.threads != 0 {
        cli.global.threads = current.threads;
    }
    Ok(cli)
}

fn read_stream(a: &TestArgs) -> Result<(DigitStream, String)> {
    let b = a.base;
    if let Some(text) = &a.digits {
        return Ok((DigitStream::from_digit_text(text, b, a.m)?, "digits".into()));
    }
    if let Some(v) = &a.value {
        return Ok((DigitStream::from_decimal_str(v, b, a.m.unwrap_or(50))?, format!("value {v}")));
    }
    if let Some(path) = &a.file {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let compact: String = text.chars().filter(|c| !c.is_whitespace()).collect();
        return Ok((DigitStream::from_digit_text(&compact, b, a.m)?, format!("file {}", path.display())));
    }
    let name = a.constant.as_deref().expect("input group is required");
    if b != 10 {
        bail!(lacunary::Error::InvalidArgument("constants and rotations produce decimal digits; use --base 10".into()));
    }
    let c = Constant::lookup(name)?;
    let m = a.m.unwrap_or(50);
    if a.rotation {
        let x0 = BigFixed::parse(&a.x0)?;
        let rot = Rotation::new(Real::Constant(c)).with_x0(x0).with_first_index(a.first_index);
        Ok((rot.digits(m)?, format!("rotation by {}", c.name)))
    } else {
        let text = c.digits_text();
        let frac = &text[text.find('.').expect("decimal point") + 1..];
        if frac.len() < m {
            bail!(lacunary::Error::InsufficientExpansion { name: c.name.into(), available: frac.len(), required: m });
        }
        Ok((DigitStream::from_digit_text(&frac[..m], 10, None)?, format!("expansion of {}", c.name)))
    }
}

fn reports_for(ds: &DigitStream, a: &TestArgs, seed: u64) -> Result<Vec<TestReport>> {
    a.tests
        .iter()
        .map(|&t| match (t, a.mc) {
            (Method::Lacunary, Some(n)) => Ok(lacunary_test_mc(ds, n, seed)),
            _ => Ok(run_test(t, ds)?),
        })
        .collect()
}

fn cmd_test(g: &Global, a: &TestArgs, out: &mut Out) -> Result<(Value, bool)> {
    if a.tests.is_empty() {
        bail!(lacunary::Error::InvalidArgument("no tests selected".into()));
    }
    let (ds, source) = read_stream(a)?;
    let reports = reports_for(&ds, a, g.seed)?;
    let rejected = reports.iter().any(|r| r.rejects(g.alpha));
    let mut doc = json!({
        "input": { "source": source, "base": ds.base(), "m": ds.len(), "digits": ds.to_digit_string() },
        "alpha": g.alpha,
        "reports": reports,
    });
    if a.constant.is_some() {
        // p-value of the lacunary test on every prefix
        let mut w = out.create("curve.csv")?;
        writeln!(w, "m,T,p_value,reject")?;
        let mut first = None;
        for m in 2..=ds.len() {
            let r = lacunary_test(&ds.prefix(m)?);
            writeln!(w, "{m},{:.12},{:.6e},{}", r.statistic, r.p_value, u8::from(r.rejects(g.alpha)))?;
            if first.is_none() && r.rejects(g.alpha) {
                first = Some(m);
            }
        }
        w.flush()?;
        doc["first_rejection"] = json!(first);
    }
    match g.format.unwrap_or(Format::Json) {
        Format::Json => out.json("report.json", &doc)?,
        Format::Csv => {
            let mut w = out.create("report.csv")?;
            writeln!(w, "method,statistic,p_value,reject")?;
            for r in &reports {
                writeln!(w, "{},{},{},{}", r.method, r.statistic, r.p_value, u8::from(r.rejects(g.alpha)))?;
            }
            w.flush()?;
        }
    }
    println!("{}", serde_json::to_string_pretty(&doc)?);
    Ok((json!({ "input": doc["input"], "tests": a.tests, "alpha": g.alpha, "mc": a.mc }), rejected))
}

#[derive(Serialize)]
struct Generated {
    source: Source,
    label: String,
    base: u32,
    m: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    precision_digits: Option<usize>,
    streams: Vec<String>,
}

fn cmd_generate(g: &Global, a: &GenerateArgs, out: &mut Out) -> Result<Value> {
    if a.source != Source::Uniform && a.base != 10 {
        bail!(lacunary::Error::InvalidArgument(format!("{:?} digits are decimal; use --base 10", a.source)));
    }
    let opts = MapOptions { precision_digits: a.precision, first_index: a.first_index };
    let (label, precision, streams) = match a.source {
        Source::Uniform => {
            let streams = (0..a.count).map(|i| uniform_digits(RngSpec::new(g.seed, i as u64), a.base, a.m)).collect::<lacunary::Result<Vec<_>>>()?;
            (format!("uniform seed {}", g.seed), None, streams)
        }
        Source::Rotation => {
            let xi = Real::parse(&a.xi)?;
            let x0 = BigFixed::parse(a.x0.as_deref().unwrap_or("0"))?;
            let label = format!("rotation by {}", xi.label());
            let rot = Rotation::new(xi).with_x0(x0).with_guard(a.guard).with_first_index(a.first_index);
            (label, None, vec![rot.digits(a.m)?])
        }
        Source::Logistic | Source::Gauss => {
            let gauss = a.source == Source::Gauss;
            let x0 = Real::parse(a.x0.as_deref().unwrap_or(if gauss { "gamma" } else { "0.1" }))?;
            let md = if gauss { gauss_map_digits(&x0, a.m, opts)? } else { logistic_digits(&x0, a.m, opts)? };
            (format!("{} map from {}", if gauss { "gauss" } else { "logistic" }, x0.label()), Some(md.precision_digits), vec![md.stream])
        }
    };
    let doc = Generated {
        source: a.source,
        label,
        base: a.base,
        m: a.m,
        precision_digits: precision,
        streams: streams.iter().map(DigitStream::to_digit_string).collect(),
    };
    match g.format.unwrap_or(Format::Csv) {
        Format::Json => out.json("digits.json", &doc)?,
        Format::Csv => {
            let mut w = out.create("digits.csv")?;
            writeln!(w, "index,digits")?;
            for (i, s) in doc.streams.iter().enumerate() {
                writeln!(w, "{i},{s}")?;
            }
            w.flush()?;
        }
    }
    for s in &doc.streams {
        println!("{s}");
    }
    Ok(json!({ "source": a.source, "label": doc.label, "base": a.base, "m": a.m, "map_options": opts, "guard": a.guard }))
}

fn cmd_nulldist(g: &Global, a: &NullArgs, out: &mut Out) -> Result<Value> {
    let cfg = ExperimentConfig {
        base: a.base,
        m_values: a.m_values.clone(),
        taus: vec![0.0],
        replicates: a.replicates,
        alpha: g.alpha,
        seed: g.seed,
        ..ExperimentConfig::default()
    };
    let summaries = null_distribution_experiment(&cfg)?;
    write_null_samples_csv(&summaries, out.create("null_samples.csv")?)?;
    match g.format.unwrap_or(Format::Json) {
        Format::Json => out.json("null_summary.json", &summaries)?,
        Format::Csv => {
            let mut w = out.create("null_summary.csv")?;
            writeln!(w, "base,m,replicates,alpha,df,empirical_size,size_se,sup_distance,mean")?;
            for s in &summaries {
                writeln!(w, "{},{},{},{},{},{},{},{},{}", s.base, s.m, s.replicates, s.alpha, s.df, s.empirical_size, s.size_se, s.sup_distance, s.mean)?;
            }
            w.flush()?;
        }
    }
    for s in &summaries {
        println!("m={:<4} size={:.4} (se {:.4})  sup|F-chi2_{}|={:.4}  mean T={:.3}", s.m, s.empirical_size, s.size_se, s.df, s.sup_distance, s.mean);
    }
    Ok(json!({ "null": cfg }))
}

fn model_spec(name: &str, tau: f64, extras: &ModelExtras) -> Result<ModelSpec> {
    let mut kv = BTreeMap::new();
    kv.insert("model".to_string(), name.to_string());
    kv.insert("tau".to_string(), tau.to_string());
    let kind = ModelKind::parse(name)?;
    let mut put = |key: &str, value: &Option<String>| {
        if let Some(v) = value {
            kv.insert(key.to_string(), v.clone());
        }
    };
    match kind {
        ModelKind::CyclicPhase { .. } => put("targets", &extras.targets),
        ModelKind::RegimeSwitch { .. } => {
            put("path", &extras.path);
            put("baseline", &extras.baseline.map(|b| b.to_string()));
        }
        ModelKind::NeymanSmooth { .. } => put("weights", &extras.weights),
        ModelKind::PhaseShift => {}
    }
    Ok(ModelSpec::from_kv(&kv)?)
}

fn cmd_power(g: &Global, a: &PowerArgs, out: &mut Out) -> Result<Value> {
    let mut cfg = ExperimentConfig::preset(&a.preset)?;
    cfg.seed = g.seed;
    cfg.alpha = g.alpha;
    if let Some(v) = a.base {
        cfg.base = v;
    }
    if let Some(v) = &a.m_values {
        cfg.m_values = v.clone();
    }
    if let Some(v) = &a.taus {
        cfg.taus = v.clone();
    }
    // preset models are rebuilt by name so that the model flags apply to them too
    let names: Vec<String> = match &a.models {
        Some(names) => names.clone(),
        None => cfg.models.iter().map(|k| k.name().to_string()).collect(),
    };
    cfg.models = names.iter().map(|n| model_spec(n, 0.0, &a.extras).map(|s| s.kind)).collect::<Result<_>>()?;
    if let Some(v) = &a.tests {
        cfg.tests = v.clone();
    }
    if let Some(v) = a.replicates {
        cfg.replicates = v;
    }
    if let Some(v) = a.burn_in {
        cfg.burn_in = v;
    }
    if let Some(v) = a.thin {
        cfg.thin = v;
    }
    if let Some(v) = a.chains {
        cfg.chains = v;
    }
    let rows = power_experiment(&cfg)?;
    match g.format.unwrap_or(Format::Csv) {
        Format::Json => out.json("power.json", &rows)?,
        Format::Csv => write_power_csv(&rows, out.create("power.csv")?)?,
    }
    for r in &rows {
        println!("({:>3}) m={:<4} tau={:<4} {:<4} {:.3} (se {:.3})", r.model, r.m, r.tau, r.test.short(), r.rate, r.se);
    }
    Ok(json!({ "power": cfg }))
}

fn cmd_noncentrality(g: &Global, a: &NoncentralityArgs, out: &mut Out) -> Result<Value> {
    let tilt = match &a.coefficient {
        Some(c) => {
            if c.len() != 3 {
                bail!(lacunary::Error::InvalidArgument(format!("--coefficient takes `j,c,s`, got {} values", c.len())));
            }
            let j = c[0];
            if j.fract() != 0.0 || j < 1.0 {
                bail!(lacunary::Error::InvalidArgument(format!("harmonic order `{j}` is not a positive integer")));
            }
            TiltSpec::constant(a.base, a.m, j as u32, c[1], c[2])?
        }
        None => build_tilt(&model_spec(&a.model, a.tau, &a.extras)?, a.base, a.m)?,
    };
    let cfg = ExperimentConfig {
        base: a.base,
        replicates: a.draws,
        burn_in: a.burn_in,
        thin: a.thin,
        chains: a.chains,
        alpha: g.alpha,
        seed: g.seed,
        ..ExperimentConfig::default()
    };
    let r = noncentrality_check(&tilt, &cfg)?;
    let mut w = out.create("noncentrality_samples.csv")?;
    writeln!(w, "draw,T,noncentral_cdf")?;
    for (i, t) in r.samples.iter().enumerate() {
        writeln!(w, "{i},{t:.12},{:.12}", noncentral_chi2_cdf(*t, r.df, r.lambda))?;
    }
    w.flush()?;
    match g.format.unwrap_or(Format::Json) {
        Format::Json => out.json("noncentrality.json", &r)?,
        Format::Csv => {
            let mut w = out.create("noncentrality.csv")?;
            writeln!(w, "base,m,df,lambda,target_mean,empirical_mean,mean_se,sup_distance,draws")?;
            writeln!(w, "{},{},{},{},{},{},{},{},{}", r.base, r.m, r.df, r.lambda, r.target_mean, r.empirical_mean, r.mean_se, r.sup_distance, r.draws)?;
            w.flush()?;
        }
    }
    println!(
        "lambda={:.4} target mean={:.3} empirical mean={:.3} (se {:.3}) sup-distance={:.4}",
        r.lambda, r.target_mean, r.empirical_mean, r.mean_se, r.sup_distance
    );
    Ok(json!({ "tilt": tilt.label, "noncentrality": cfg }))
}

fn scan_options(s: &ScanInput) -> ScanOptions {
    ScanOptions {
        id_column: s.id_column.clone(),
        amount_column: s.amount_column.clone(),
        m: s.m,
        alphas: s.alphas.clone(),
        working_precision: s.working_precision,
    }
}

fn run_scan(s: &ScanInput) -> Result<lacunary::ScanSummary> {
    let file = File::open(&s.input).with_context(|| format!("opening {}", s.input.display()))?;
    Ok(scan_dataset(file, &scan_options(s))?)
}

fn cmd_scan(g: &Global, a: &ScanArgs, out: &mut Out) -> Result<Value> {
    let summary = run_scan(&a.scan)?;
    match g.format.unwrap_or(Format::Csv) {
        Format::Json => out.json("scan.json", &summary)?,
        Format::Csv => summary.write_csv(out.create("scan.csv")?)?,
    }
    let by_alpha: BTreeMap<String, Value> = summary
        .options
        .alphas
        .iter()
        .map(|&al| (al.to_string(), json!({ "flagged": summary.flagged(al), "discordant": summary.discordance(al) })))
        .collect();
    out.json("discordance.json", &json!({ "records": summary.records.len(), "alphas": by_alpha, "errors": summary.errors }))?;
    for &al in &summary.options.alphas {
        println!("alpha={al}: {} flagged, discordant: {}", summary.flagged(al).len(), summary.discordance(al).join(" "));
    }
    for e in &summary.errors {
        eprintln!("row {}: {}", e.row, e.message);
    }
    Ok(json!({ "scan": scan_options(&a.scan) }))
}

fn cmd_trajectory(a: &TrajectoryArgs, out: &mut Out) -> Result<Value> {
    let summary = run_scan(&a.scan)?;
    let ids: Vec<String> = match &a.ids {
        Some(ids) => ids.clone(),
        None => {
            let alpha = *summary.options.alphas.first().context("no alpha levels")?;
            summary.discordance(alpha).into_iter().map(String::from).collect()
        }
    };
    let refs: Vec<&str> = ids.iter().map(String::as_str).collect();
    export_trajectories(&summary, &refs, out.create("trajectories.csv")?)?;
    println!("{} trajectories written", ids.len());
    Ok(json!({ "scan": scan_options(&a.scan), "ids": ids }))
}
