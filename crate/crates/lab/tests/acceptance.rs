//! End-to-end acceptance run over the shipped configs. Prints one verdict
//! line per criterion and fails at the end if any criterion missed.
//!
//! Takes several minutes on one core.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rru_core::enumerate::{enumerate_exact, EnumerationLimits};
use rru_core::harness::{Detail, EnsembleSummary, TestKind, TestOutcome, Threshold};
use rru_core::rng::{stream, Domain};
use rru_lab::{load, run_experiment, Loaded, Overrides};

fn config_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(format!("{name}.toml"))
}

fn loaded(name: &str) -> Loaded {
    load(&config_path(name), &Overrides::default()).expect("shipped config loads")
}

struct Ledger {
    lines: Vec<(String, bool, String)>,
}

impl Ledger {
    fn record(&mut self, id: &str, pass: bool, what: String) {
        println!("{} {id:<4} {what}", if pass { "PASS" } else { "FAIL" });
        self.lines.push((id.to_string(), pass, what));
    }
}

struct Runs {
    root: tempfile::TempDir,
    cache: HashMap<&'static str, EnsembleSummary>,
}

impl Runs {
    fn summary(&mut self, name: &'static str) -> &EnsembleSummary {
        let dir = self.root.path().join(name);
        self.cache.entry(name).or_insert_with(|| {
            let t = Instant::now();
            let out = run_experiment(&loaded(name), &dir, None, false).expect("run succeeds");
            println!("     ({name}: {:.0} s)", t.elapsed().as_secs_f64());
            out.summary
        })
    }

    fn outcome(&mut self, name: &'static str, test: TestKind) -> TestOutcome {
        self.summary(name).outcome(test).cloned().unwrap_or_else(|| panic!("{name} runs {}", test.name()))
    }
}

fn describe(o: &TestOutcome) -> String {
    let bound = match o.threshold {
        Threshold::Below(b) => format!("< {b}"),
        Threshold::Within([lo, hi]) => format!("in [{lo}, {hi}]"),
    };
    format!("{} = {:.4} {bound} (n={})", o.test.name(), o.value, o.sample_size)
}

fn exactness(ledger: &mut Ledger) {
    let polya = loaded("polya");
    let exp = &polya.experiment;
    let reps = 100_000u64;
    let start = Instant::now();
    let mut counts: BTreeMap<u64, u64> = BTreeMap::new();
    for i in 0..reps {
        let mut rng = stream(exp.config.seed, Domain::Oracle, i);
        let mut state = exp.initial.clone();
        state.step(&exp.laws, &mut rng);
        state.step(&exp.laws, &mut rng);
        *counts.entry((state.z() * 1e9).round() as u64).or_default() += 1;
    }
    let elapsed = start.elapsed().as_secs_f64();
    let exact = enumerate_exact(exp.initial.y1(), exp.initial.y2(), &exp.laws, 2, EnumerationLimits::default())
        .expect("two steps enumerate");
    let mut worst = 0.0f64;
    let mut support_ok = true;
    let mut probs = Vec::new();
    for (z, p) in exact.z_distribution() {
        let key = (z * 1e9).round() as u64;
        let freq = counts.remove(&key).unwrap_or(0) as f64 / reps as f64;
        let se = (p * (1.0 - p) / reps as f64).sqrt();
        worst = worst.max((freq - p).abs() / se);
        probs.push(p);
    }
    support_ok &= counts.is_empty();
    let thirds = probs.len() == 3 && probs.iter().all(|p| (p - 1.0 / 3.0).abs() < 1e-12);
    ledger.record(
        "C1",
        worst < 4.0 && support_ok && thirds && elapsed < 5.0,
        format!("Polya Z_2 over {reps} runs: max |z| {worst:.2} < 4, exact law thirds {thirds}, {elapsed:.2} s < 5 s"),
    );
}

fn equal_mean(ledger: &mut Ledger, runs: &mut Runs) {
    let pivot = runs.outcome("equal-two-point", TestKind::PivotCltEqual);
    ledger.record("C2", pivot.value < 0.03, describe(&pivot));

    let bridge = runs.outcome("equal-two-point", TestKind::BridgeTail);
    let expected = [0.8825, 0.6065, 0.3247, 0.1353];
    let (pass, what) = match &bridge.detail {
        Detail::Tail { rows, .. } => {
            let refs_ok = rows.len() == expected.len()
                && rows.iter().zip(expected).all(|(r, e)| (r.reference - e).abs() < 5e-5);
            let worst = rows.iter().map(|r| (r.empirical - r.reference).abs()).fold(0.0, f64::max);
            let table: Vec<String> = rows.iter().map(|r| format!("{}:{:.4}/{:.4}", r.x, r.empirical, r.reference)).collect();
            (refs_ok && worst <= 0.03, format!("bridge tail max deviation {worst:.4} <= 0.03 [{}]", table.join(" ")))
        }
        other => (false, format!("unexpected detail {other:?}")),
    };
    ledger.record("C3", pass, what);

    let draws = runs.outcome("equal-two-point", TestKind::DrawCountEqual);
    ledger.record("C4", draws.value < 0.04, describe(&draws));
}

fn unequal_mean(ledger: &mut Ledger, runs: &mut Runs) {
    let pivot = runs.outcome("unequal-half", TestKind::PivotCltUnequal);
    ledger.record("C5", pivot.value < 0.04, describe(&pivot));

    let normal = runs.outcome("unequal-rate", TestKind::PhaseTransition);
    ledger.record("C6a", normal.value < 0.05, describe(&normal));
    let drift = runs.outcome("unequal-phase", TestKind::PhaseTransition);
    let pass = (0.85..=1.15).contains(&drift.value) && drift.sample_size == 2000;
    ledger.record("C6b", pass, format!("{}; {}", describe(&drift), drift.notes.join("; ")));

    let rate = runs.outcome("unequal-rate", TestKind::DrawRate);
    let (pass, what) = match &rate.detail {
        Detail::Rate { rows } => {
            let horizons: Vec<u64> = rows.iter().map(|r| r.horizon).collect();
            let errs: Vec<f64> = rows.iter().map(|r| r.median_relative_error).collect();
            let decreasing = errs.windows(2).all(|w| w[1] < w[0]);
            let last = errs.last().copied().unwrap_or(f64::NAN);
            (
                horizons == [1 << 12, 1 << 14, 1 << 16] && decreasing && last < 0.10,
                format!("draw rate errors {errs:.4?} at {horizons:?}: decreasing, last < 0.10"),
            )
        }
        other => (false, format!("unexpected detail {other:?}")),
    };
    ledger.record("C7", pass, what);
}

fn embedding(ledger: &mut Ledger, runs: &mut Runs) {
    let atoms = runs.outcome("embedding", TestKind::EmbeddingAtoms);
    let (pass, what) = match &atoms.detail {
        Detail::Atoms { rows, mean_tau, target_tau } => {
            let z = rows.iter().map(|r| r.z_score.abs()).fold(0.0, f64::max);
            let halves = rows.len() == 2 && rows.iter().all(|r| (r.probability - 0.5).abs() < 1e-12);
            let tau = (mean_tau / target_tau - 1.0).abs();
            (
                halves && z < 4.0 && tau <= 0.02 && atoms.sample_size == 100_000,
                format!("atoms max |z| {z:.2} < 4, mean tau {mean_tau:.4} within 2% of {target_tau}"),
            )
        }
        other => (false, format!("unexpected detail {other:?}")),
    };
    let scale = runs.outcome("embedding", TestKind::EmbeddingTimeScale);
    let pass = pass && (0.95..=1.05).contains(&scale.value) && scale.sample_size == 200;
    ledger.record("C8", pass, format!("{what}; {}", describe(&scale)));
}

fn scans(ledger: &mut Ledger, runs: &mut Runs) {
    for name in ["polya", "equal-two-point"] {
        let scan = runs.outcome(name, TestKind::PointMassScan);
        ledger.record(
            "C9",
            scan.value == 0.0 && scan.sample_size == 10_000,
            format!("{name}: {}; {}", describe(&scan), scan.notes.join("; ")),
        );
    }

    let lil = runs.outcome("polya-lil", TestKind::LilEnvelope);
    let above = match &lil.detail {
        Detail::Ratios { above_fraction, .. } => *above_fraction,
        _ => f64::NAN,
    };
    ledger.record(
        "C10",
        (0.3..=1.5).contains(&lil.value) && above <= 0.01 && lil.sample_size == 500,
        format!("{}; fraction above 2.0: {above:.4}", describe(&lil)),
    );
}

fn without_timestamps(bytes: &[u8]) -> serde_json::Value {
    let mut v: serde_json::Value = serde_json::from_slice(bytes).expect("manifest is json");
    let obj = v.as_object_mut().expect("manifest is an object");
    obj.remove("started");
    obj.remove("finished");
    v
}

fn tree(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d).expect("output dir readable") {
            let path = entry.expect("dir entry").path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(dir).expect("under root").to_path_buf();
                out.insert(rel, fs::read(&path).expect("output readable"));
            }
        }
    }
    out
}

fn determinism(ledger: &mut Ledger) {
    for name in ["smoke", "polya"] {
        let cfg = loaded(name);
        let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
        for (dir, threads) in dirs.iter().zip([1, 3]) {
            run_experiment(&cfg, dir.path(), Some(threads), false).expect("run succeeds");
        }
        let (a, b) = (tree(dirs[0].path()), tree(dirs[1].path()));
        let mut differing = Vec::new();
        for (path, bytes) in &a {
            let same = match b.get(path) {
                Some(other) if path.as_os_str() == "manifest.json" => {
                    without_timestamps(bytes) == without_timestamps(other)
                }
                Some(other) => bytes == other,
                None => false,
            };
            if !same {
                differing.push(path.display().to_string());
            }
        }
        let same_set = a.keys().eq(b.keys());
        ledger.record(
            "C11",
            same_set && differing.is_empty(),
            format!("{name} at 1 and 3 threads: {} files, differing {differing:?}", a.len()),
        );
    }
}

#[test]
fn acceptance_criteria() {
    let mut ledger = Ledger { lines: Vec::new() };
    let mut runs = Runs { root: tempfile::tempdir().unwrap(), cache: HashMap::new() };

    exactness(&mut ledger);
    equal_mean(&mut ledger, &mut runs);
    unequal_mean(&mut ledger, &mut runs);
    embedding(&mut ledger, &mut runs);
    scans(&mut ledger, &mut runs);
    determinism(&mut ledger);

    let failed: Vec<String> =
        ledger.lines.iter().filter(|(_, pass, _)| !pass).map(|(id, _, what)| format!("{id}: {what}")).collect();
    println!("{} of {} criteria lines pass", ledger.lines.len() - failed.len(), ledger.lines.len());
    assert!(failed.is_empty(), "criteria missed:\n{}", failed.join("\n"));
}
