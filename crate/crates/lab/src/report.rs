//! Files written for a run: one CSV per test, `summary.json`, `report.txt`
//! and plot data under `plots/`.
//!
//! Numbers use Rust's shortest round-trip formatting, so identical summaries
//! give identical bytes.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rru_core::harness::{Detail, EnsembleSummary, TestOutcome, Threshold, Verdict};
use rru_core::math::normal_quantile;
use serde::Serialize;

use crate::LabError;

fn io(path: &Path) -> impl FnOnce(std::io::Error) -> LabError + '_ {
    move |source| LabError::Io { path: path.to_path_buf(), source }
}

fn write_file(dir: &Path, name: &str, bytes: &[u8], files: &mut Vec<String>) -> Result<(), LabError> {
    let path = dir.join(name);
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(io(parent))?;
    }
    fs::write(&path, bytes).map_err(io(&path))?;
    files.push(name.replace('\\', "/"));
    Ok(())
}

fn csv_bytes(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<Vec<u8>, LabError> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    let err = |e: csv::Error| LabError::Internal(e.to_string());
    w.write_record(header).map_err(err)?;
    for r in rows {
        w.write_record(&r).map_err(err)?;
    }
    w.into_inner().map_err(|e| LabError::Internal(e.to_string()))
}

fn f(x: f64) -> String {
    format!("{x}")
}

/// The per-test table.
pub fn test_csv(o: &TestOutcome) -> Result<Vec<u8>, LabError> {
    match &o.detail {
        Detail::Pivots { samples, .. } => csv_bytes(
            &["index", "pivot", "observed", "proxy", "normalizer"],
            samples.iter().map(|s| vec![s.index.to_string(), f(s.pivot), f(s.observed), f(s.proxy), f(s.normalizer)]),
        ),
        Detail::Tail { rows, two_sided, .. } => csv_bytes(
            &["x", "empirical", "reference", "two_sided_empirical", "two_sided_reference"],
            rows.iter().zip(two_sided).map(|(a, b)| vec![f(a.x), f(a.empirical), f(a.reference), f(b.empirical), f(b.reference)]),
        ),
        Detail::Histogram { bins, .. } => csv_bytes(
            &["lo", "hi", "count", "local_rate", "tail_probability", "flagged"],
            bins.iter().map(|b| {
                vec![f(b.lo), f(b.hi), b.count.to_string(), f(b.local_rate), f(b.tail_probability), b.flagged.to_string()]
            }),
        ),
        Detail::Ratios { samples, .. } | Detail::TimeScale { samples, .. } => {
            csv_bytes(&["index", "value"], samples.iter().map(|s| vec![s.index.to_string(), f(s.value)]))
        }
        Detail::Rate { rows } => csv_bytes(
            &["horizon", "median_relative_error"],
            rows.iter().map(|r| vec![r.horizon.to_string(), f(r.median_relative_error)]),
        ),
        Detail::Atoms { rows, .. } => csv_bytes(
            &["value", "probability", "frequency", "z_score"],
            rows.iter().map(|r| vec![f(r.value), f(r.probability), f(r.frequency), f(r.z_score)]),
        ),
    }
}

fn dat(header: &str, rows: impl IntoIterator<Item = Vec<f64>>) -> Vec<u8> {
    let mut s = format!("# {header}\n");
    for r in rows {
        let line: Vec<String> = r.iter().map(|x| f(*x)).collect();
        let _ = writeln!(s, "{}", line.join(" "));
    }
    s.into_bytes()
}

/// Plot-ready whitespace-separated columns for `o`, if it has a curve.
pub fn plot_data(o: &TestOutcome) -> Option<(&'static str, Vec<u8>)> {
    match &o.detail {
        Detail::Tail { curve, .. } => Some(("tail.dat", dat("x empirical exp(-2x^2)", curve.iter().map(|r| vec![r.x, r.empirical, r.reference])))),
        Detail::Pivots { samples, .. } => {
            let mut p: Vec<f64> = samples.iter().map(|s| s.pivot).collect();
            p.sort_by(f64::total_cmp);
            let r = p.len() as f64;
            Some(("qq.dat", dat("normal_quantile sample_quantile", p.iter().enumerate().map(|(i, &v)| vec![normal_quantile((i as f64 + 0.5) / r), v]))))
        }
        Detail::Histogram { bins, .. } => Some(("hist.dat", dat("lo hi count", bins.iter().map(|b| vec![b.lo, b.hi, b.count as f64])))),
        Detail::TimeScale { trace, .. } => Some(("trace.dat", dat("n mean_normalized_clock", trace.iter().map(|t| vec![t[0], t[1]])))),
        Detail::Ratios { samples, .. } => {
            let mut v: Vec<f64> = samples.iter().map(|s| s.value).collect();
            v.sort_by(f64::total_cmp);
            let r = v.len() as f64;
            Some(("ecdf.dat", dat("ratio ecdf", v.iter().enumerate().map(|(i, &x)| vec![x, (i as f64 + 1.0) / r]))))
        }
        Detail::Rate { .. } | Detail::Atoms { .. } => None,
    }
}

#[derive(Serialize)]
struct OutcomeLine<'a> {
    test: &'a str,
    anchor: &'a str,
    statistic: &'a str,
    sample_size: u64,
    excluded: u64,
    value: f64,
    threshold: Threshold,
    verdict: Verdict,
    underpowered: bool,
    #[serde(skip_serializing_if = "<[String]>::is_empty")]
    notes: &'a [String],
    table: String,
}

#[derive(Serialize)]
struct Summary<'a> {
    name: &'a str,
    config_hash: &'a str,
    seed: u64,
    regime: rru_core::Regime,
    replicates: u64,
    degenerate: u64,
    all_pass: bool,
    outcomes: Vec<OutcomeLine<'a>>,
}

pub fn summary_json(summary: &EnsembleSummary, hash: &str) -> Result<Vec<u8>, LabError> {
    let s = Summary {
        name: &summary.name,
        config_hash: hash,
        seed: summary.seed,
        regime: summary.regime,
        replicates: summary.replicates,
        degenerate: summary.degenerate,
        all_pass: summary.all_pass(),
        outcomes: summary
            .outcomes
            .iter()
            .map(|o| OutcomeLine {
                test: o.test.name(),
                anchor: &o.anchor,
                statistic: &o.statistic,
                sample_size: o.sample_size,
                excluded: o.excluded,
                value: o.value,
                threshold: o.threshold,
                verdict: o.verdict,
                underpowered: o.underpowered,
                notes: &o.notes,
                table: format!("{}.csv", o.test.name()),
            })
            .collect(),
    };
    let mut v = serde_json::to_vec_pretty(&s).map_err(|e| LabError::Internal(e.to_string()))?;
    v.push(b'\n');
    Ok(v)
}

fn threshold_text(t: &Threshold) -> String {
    match t {
        Threshold::Below(b) => format!("< {b}"),
        Threshold::Within([lo, hi]) => format!("in [{lo}, {hi}]"),
    }
}

/// One `PASS`/`FAIL` line per test, each citing the limit statement it checks.
pub fn verdict_line(o: &TestOutcome) -> String {
    let v = if o.passed() { "PASS" } else { "FAIL" };
    let under = if o.underpowered { " (underpowered)" } else { "" };
    format!(
        "{v} {:<22} value {:.6} {} n={}{under}  [{}]",
        o.test.name(),
        o.value,
        threshold_text(&o.threshold),
        o.sample_size,
        o.anchor
    )
}

pub fn report_text(summary: &EnsembleSummary, hash: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "experiment {} ({:?})", summary.name, summary.regime);
    let _ = writeln!(s, "config sha256 {hash}");
    let _ = writeln!(s, "seed {}  replicates {}  degenerate {}", summary.seed, summary.replicates, summary.degenerate);
    let _ = writeln!(s);
    for o in &summary.outcomes {
        let _ = writeln!(s, "{}", verdict_line(o));
        let _ = writeln!(s, "    statistic: {}", o.statistic);
        if o.excluded > 0 {
            let _ = writeln!(s, "    excluded: {}", o.excluded);
        }
        for n in &o.notes {
            let _ = writeln!(s, "    note: {n}");
        }
    }
    let _ = writeln!(s);
    let _ = writeln!(s, "overall: {}", if summary.all_pass() { "PASS" } else { "FAIL" });
    s
}

/// Writes every output file under `dir` and returns their relative names.
pub fn write_outputs(dir: &Path, summary: &EnsembleSummary, config_canonical: &str, hash: &str) -> Result<Vec<String>, LabError> {
    fs::create_dir_all(dir).map_err(io(dir))?;
    let mut files = Vec::new();
    write_file(dir, "config.toml", config_canonical.as_bytes(), &mut files)?;
    for o in &summary.outcomes {
        write_file(dir, &format!("{}.csv", o.test.name()), &test_csv(o)?, &mut files)?;
        if let Some((suffix, bytes)) = plot_data(o) {
            write_file(dir, &format!("plots/{}.{suffix}", o.test.name()), &bytes, &mut files)?;
        }
    }
    write_file(dir, "summary.json", &summary_json(summary, hash)?, &mut files)?;
    write_file(dir, "report.txt", report_text(summary, hash).as_bytes(), &mut files)?;
    Ok(files)
}
