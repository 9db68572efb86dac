//! `lacunary` command-line tool.
//!
//! Exit status: 0 success, 1 rejection with `--reject-exit`, 2 usage or
//! input error, 3 numeric failure (digit boundary within working precision,
//! degenerate orbit, expansion too short).

mod cli;
mod run;

use std::ffi::OsString;
use std::path::Path;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::Parser;

use cli::{Cli, Command};

/// Global flags that take a value; needed to locate the subcommand in argv.
const VALUE_FLAGS: [&str; 6] = ["--seed", "--out-dir", "--format", "--threads", "--config", "--alpha"];

fn config_path(args: &[OsString]) -> Option<OsString> {
    let mut it = args.iter();
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        if s == "--config" {
            return it.next().cloned();
        }
        if let Some(v) = s.strip_prefix("--config=") {
            return Some(v.into());
        }
    }
    None
}

/// Index of the subcommand token, skipping global flags and their values.
fn subcommand_index(args: &[OsString]) -> Option<usize> {
    let mut i = 1;
    while i < args.len() {
        let s = args[i].to_string_lossy();
        if VALUE_FLAGS.contains(&s.as_ref()) {
            i += 2;
        } else if s.starts_with('-') {
            i += 1;
        } else {
            return Some(i);
        }
    }
    None
}

/// `key = value` lines become `--key value` flags; `#` starts a comment.
/// Booleans: `key = true` becomes `--key`, `key = false` is dropped.
pub fn config_flags(text: &str) -> Result<Vec<OsString>> {
    let mut flags = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').with_context(|| format!("config line {}: expected `key = value`, got `{line}`", n + 1))?;
        let flag = format!("--{}", key.trim().replace('_', "-"));
        let value = value.split(',').map(str::trim).collect::<Vec<_>>().join(",");
        match value.as_str() {
            "true" if flag != "--baseline" => flags.push(flag.into()),
            "false" if flag != "--baseline" => {}
            _ => {
                flags.push(flag.into());
                flags.push(value.into());
            }
        }
    }
    Ok(flags)
}

/// Inserts config-file flags right after the subcommand, so that flags given
/// on the command line come later and win.
fn merged_args(args: Vec<OsString>) -> Result<Vec<OsString>> {
    let Some(path) = config_path(&args) else {
        return Ok(args);
    };
    let text = std::fs::read_to_string(Path::new(&path)).with_context(|| format!("reading config {}", Path::new(&path).display()))?;
    let extra = config_flags(&text)?;
    let at = subcommand_index(&args).map_or(args.len(), |i| i + 1);
    let mut merged = args[..at].to_vec();
    merged.extend(extra);
    merged.extend_from_slice(&args[at..]);
    Ok(merged)
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<lacunary::Error>() {
        Some(e) if e.is_numeric() => 3,
        _ => 2,
    }
}

fn run(cli: Cli) -> Result<bool> {
    let cli = match &cli.command {
        Command::Rerun(r) => run::load_manifest(&r.manifest, &cli.global)?,
        _ => cli,
    };
    if cli.global.threads > 0 {
        rayon::ThreadPoolBuilder::new().num_threads(cli.global.threads).build_global().context("configuring the thread pool")?;
    }
    let outcome = run::execute(&cli)?;
    run::write_manifest(&cli, &outcome)?;
    Ok(outcome.rejected && cli.global.reject_exit)
}

fn main() -> ExitCode {
    let args = match merged_args(std::env::args_os().collect()) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => e.exit(),
    };
    match run(cli) {
        Ok(true) => ExitCode::from(1),
        Ok(false) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn os(v: &[&str]) -> Vec<OsString> {
        v.iter().map(OsString::from).collect()
    }

    #[test]
    fn config_lines_become_flags() {
        let flags = config_flags("# comment\nm_values = 15, 50\nreject_exit = true\nbaseline = false\nverbose = false\n\n").unwrap();
        assert_eq!(flags, os(&["--m-values", "15,50", "--reject-exit", "--baseline", "false"]));
        assert!(config_flags("no equals sign").is_err());
    }

    #[test]
    fn config_flags_go_after_the_subcommand() {
        let args = os(&["lacunary", "--seed", "3", "--out-dir", "x", "power", "--replicates", "9"]);
        assert_eq!(subcommand_index(&args), Some(5));
        assert_eq!(config_path(&os(&["lacunary", "power", "--config=a.conf"])), Some("a.conf".into()));
        assert_eq!(config_path(&args), None);
    }
}
