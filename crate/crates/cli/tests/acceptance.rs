//! One PASS/FAIL line per acceptance criterion. Runs without the libtest
//! harness so the lines always reach the output; exits nonzero on failure.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use common::{
    brute_force_spearman, correlated_sample, finite_difference_check, pearson_for_spearman,
    tied_lists, ENSEMBLE_ROWS, FD_MAX_REL_ERROR,
};
use vocomp::corpus::{parse_tuple_file, split_corpus, SplitRatios};
use vocomp::eval::{bootstrap_ci, ensemble_scores, fmt_score, spearman, ScoreTable};
use vocomp::model::{load_model, AlphaMode, Model};
use vocomp::synthetic::{generate, SyntheticSpec};
use vocomp::trainer::{build_model, train, TrainConfig, TrainOutcome};

const GRADIENT_SEEDS: u64 = 24;
const GRADIENT_BUDGET: Duration = Duration::from_secs(60);
const RECOVERY_BUDGET: Duration = Duration::from_secs(300);
const MIN_DEV_SCORE: f64 = 0.90;
const SPEARMAN_CASES: usize = 1000;
const SPEARMAN_TOL: f64 = 1e-12;
const BOOTSTRAP_N: usize = 638;
const BOOTSTRAP_REPLICATES: usize = 10_000;
/// Width of the reported interval (0.455, 0.574).
const REFERENCE_WIDTH: f64 = 0.574 - 0.455;
const WIDTH_TOLERANCE: f64 = 0.5;

type Check = Result<String, String>;

fn ensure(ok: bool, detail: String) -> Check {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn gradient_oracle() -> Check {
    let start = Instant::now();
    let mut worst = (0.0, String::new());
    let mut checked = 0;
    for seed in 0..GRADIENT_SEEDS {
        let r = finite_difference_check(seed, AlphaMode::Learned);
        checked += r.checked;
        if r.max_rel_error >= worst.0 {
            worst = (r.max_rel_error, format!("seed {seed} {}", r.worst));
        }
    }
    let took = start.elapsed();
    ensure(
        worst.0 < FD_MAX_REL_ERROR && took < GRADIENT_BUDGET,
        format!(
            "{GRADIENT_SEEDS} instances, {checked} partials, max rel error {:.2e} ({}), {took:.1?}",
            worst.0, worst.1
        ),
    )
}

struct Recovery {
    outcome: TrainOutcome,
    idioms: Vec<String>,
    took: Duration,
}

fn synthetic_run() -> Result<Recovery, String> {
    let spec = SyntheticSpec::default();
    let syn = generate(&spec);
    let parsed = parse_tuple_file(syn.to_tsv().as_bytes()).map_err(|e| e.to_string())?;
    let mut corpus = parsed.corpus;
    let mut lexicon = parsed.lexicon;
    split_corpus(&mut corpus, SplitRatios::default(), 1).map_err(|e| e.to_string())?;
    lexicon.count_training(&corpus);
    let config = TrainConfig {
        dim: 10,
        learning_rate: 0.05,
        l2: 1e-5,
        k: spec.threshold(),
        max_epochs: 30,
        seed: 1,
        ..TrainConfig::default()
    };
    let start = Instant::now();
    let outcome = train(&corpus, &lexicon, &config).map_err(|e| e.to_string())?;
    Ok(Recovery {
        outcome,
        idioms: syn.idioms.iter().map(|(v, o)| format!("{v} {o}")).collect(),
        took: start.elapsed(),
    })
}

fn recovery(run: &Result<Recovery, String>) -> Check {
    let run = run.as_ref().map_err(Clone::clone)?;
    let m = &run.outcome.model;
    let mut ranked: Vec<(f64, String)> = m
        .candidates
        .phrases()
        .iter()
        .enumerate()
        .map(|(p, &(v, o))| (m.candidate_alpha(p as u32), m.lexicon.phrase_label(v, o)))
        .collect();
    ranked.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(&b.1)));
    let decile = ranked.len().div_ceil(10);
    let ranks: Vec<usize> = run
        .idioms
        .iter()
        .map(|i| {
            ranked
                .iter()
                .position(|(_, l)| l == i)
                .unwrap_or(usize::MAX)
        })
        .collect();
    ensure(
        ranks.iter().all(|&r| r < decile) && run.took < RECOVERY_BUDGET,
        format!(
            "{} candidates, bottom decile = lowest {decile}, idiom ranks {ranks:?}, best epoch {}, {:.1?}",
            ranked.len(),
            run.outcome.best_epoch,
            run.took
        ),
    )
}

fn pseudo_disambiguation(run: &Result<Recovery, String>) -> Check {
    let run = run.as_ref().map_err(Clone::clone)?;
    let s = run.outcome.best_dev_score;
    ensure(
        s >= MIN_DEV_SCORE,
        format!("dev score {s:.4} (threshold {MIN_DEV_SCORE})"),
    )
}

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/data")
        .join(name)
}

/// Run `vocomp train` on the bundled corpus; returns model and log paths.
fn cli_train(dir: &Path, name: &str, extra: &[&str]) -> Result<(PathBuf, PathBuf), String> {
    let model = dir.join(name);
    let cfg = data("tiny.cfg");
    let out = Command::new(env!("CARGO_BIN_EXE_vocomp"))
        .current_dir(env!("CARGO_MANIFEST_DIR"))
        .args(["train", "-q", "--config"])
        .arg(&cfg)
        .arg("--model")
        .arg(&model)
        .args(extra)
        .output()
        .map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(String::from_utf8_lossy(&out.stderr).into_owned());
    }
    let log = dir.join(format!("{name}.log"));
    Ok((model, log))
}

fn bits(xs: &[f64]) -> Vec<u64> {
    xs.iter().map(|x| x.to_bits()).collect()
}

fn log_rows(path: &Path) -> Result<Vec<String>, String> {
    let text = std::fs::read_to_string(path).map_err(|e| e.to_string())?;
    Ok(text
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(str::to_owned)
        .collect())
}

fn baselines() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let load = |p: &Path| -> Result<Model, String> { load_model(p).map_err(|e| e.to_string()) };
    let (init, _) = cli_train(
        dir.path(),
        "init.bin",
        &["--fix-alpha", "1.0", "--epochs", "0"],
    )?;
    let (fixed, fixed_log) = cli_train(dir.path(), "fixed.bin", &["--fix-alpha", "1.0"])?;
    let (empty, empty_log) = cli_train(dir.path(), "empty.bin", &["--set", "k=1000000000"])?;
    let (init, fixed, empty) = (load(&init)?, load(&fixed)?, load(&empty)?);

    let frozen = bits(&fixed.params.weights) == bits(&init.params.weights)
        && bits(fixed.params.phrases.data()) == bits(init.params.phrases.data());
    let trained = bits(fixed.params.nouns.data()) != bits(init.params.nouns.data());
    let same = empty.candidates.is_empty()
        && bits(empty.params.nouns.data()) == bits(fixed.params.nouns.data())
        && bits(empty.params.predicates.data()) == bits(fixed.params.predicates.data())
        && log_rows(&empty_log)? == log_rows(&fixed_log)?;
    ensure(
        frozen && trained && same,
        format!(
            "{} candidates: W and n frozen {frozen}, other blocks trained {trained}; \
             empty candidate run identical {same}",
            fixed.candidates.len()
        ),
    )
}

fn spearman_oracle() -> Check {
    let mut worst: f64 = 0.0;
    let mut degenerate = 0;
    for (x, y) in tied_lists(SPEARMAN_CASES, 2024) {
        match (spearman(&x, &y), brute_force_spearman(&x, &y)) {
            (Ok(a), Some(b)) => worst = worst.max((a - b).abs()),
            (Err(_), None) => degenerate += 1,
            _ => return Err("library and oracle disagree on a degenerate case".into()),
        }
    }
    let x: Vec<f64> = (0..30).map(|i| (i as f64).sqrt()).collect();
    let rev: Vec<f64> = x.iter().rev().copied().collect();
    let identical = spearman(&x, &x).ok() == Some(1.0);
    let reversed = spearman(&x, &rev).ok() == Some(-1.0);
    ensure(
        worst <= SPEARMAN_TOL && identical && reversed,
        format!(
            "{SPEARMAN_CASES} tied lists ({degenerate} constant), max |diff| {worst:.1e}; \
             identical {identical}, reversed {reversed}"
        ),
    )
}

fn ensemble_arithmetic() -> Check {
    let a: ScoreTable = ENSEMBLE_ROWS
        .iter()
        .map(|r| (r.0.to_owned(), r.1))
        .collect();
    let b: ScoreTable = ENSEMBLE_ROWS
        .iter()
        .map(|r| (r.0.to_owned(), r.2))
        .collect();
    let e = ensemble_scores(&[a, b]).map_err(|e| e.to_string())?;
    let wrong: Vec<String> = ENSEMBLE_ROWS
        .iter()
        .filter(|r| fmt_score(e.scores[r.0]) != r.3)
        .map(|r| format!("{}: {} != {}", r.0, fmt_score(e.scores[r.0]), r.3))
        .collect();
    ensure(
        wrong.is_empty(),
        format!("{} of 9 rows match {wrong:?}", 9 - wrong.len()),
    )
}

fn initialization() -> Check {
    let syn = generate(&SyntheticSpec::default());
    let parsed = parse_tuple_file(syn.to_tsv().as_bytes()).map_err(|e| e.to_string())?;
    let mut lexicon = parsed.lexicon;
    lexicon.count_training(&parsed.corpus);
    let mut off = 0;
    let mut total = 0;
    for k in [0, 10, 300] {
        let model = build_model(
            &lexicon,
            &TrainConfig {
                k,
                ..TrainConfig::default()
            },
        );
        for p in 0..model.candidates.len() {
            total += 1;
            off += usize::from(model.candidate_alpha(p as u32) != 0.5);
        }
    }
    ensure(
        total > 0 && off == 0,
        format!("{total} candidates across three thresholds, {off} not exactly 0.5"),
    )
}

fn determinism() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let read = |p: &Path| std::fs::read(p).map_err(|e| e.to_string());
    let (model, log) = cli_train(dir.path(), "run.bin", &[])?;
    let (m1, l1) = (read(&model)?, read(&log)?);
    cli_train(dir.path(), "run.bin", &[])?;
    let (m2, l2) = (read(&model)?, read(&log)?);
    ensure(
        m1 == m2 && l1 == l2,
        format!(
            "model {} bytes identical {}, log identical {}",
            m1.len(),
            m1 == m2,
            l1 == l2
        ),
    )
}

fn bootstrap() -> Check {
    let monotone: Vec<(f64, f64)> = (0..BOOTSTRAP_N)
        .map(|i| (i as f64, (i as f64).ln_1p()))
        .collect();
    let flat = bootstrap_ci(&monotone, 1000, 0.95, 3).map_err(|e| e.to_string())?;
    let degenerate = flat.lo == 1.0 && flat.hi == 1.0;

    let noisy = correlated_sample(BOOTSTRAP_N, pearson_for_spearman(0.5), 11);
    let (gold, pred): (Vec<f64>, Vec<f64>) = noisy.iter().copied().unzip();
    let rho = spearman(&gold, &pred).map_err(|e| e.to_string())?;
    let ci = bootstrap_ci(&noisy, BOOTSTRAP_REPLICATES, 0.95, 5).map_err(|e| e.to_string())?;
    let ratio = ci.width() / REFERENCE_WIDTH;
    ensure(
        degenerate && (ratio - 1.0).abs() <= WIDTH_TOLERANCE,
        format!(
            "monotone CI [{}, {}]; n={BOOTSTRAP_N} rho {rho:.3} CI ({:.3}, {:.3}) width {:.3} = {ratio:.2}x reference {REFERENCE_WIDTH:.3}",
            flat.lo, flat.hi, ci.lo, ci.hi, ci.width()
        ),
    )
}

fn main() {
    let run = synthetic_run();
    let results: Vec<(&str, Check)> = vec![
        ("gradient oracle", gradient_oracle()),
        ("synthetic compositionality recovery", recovery(&run)),
        (
            "pseudo-disambiguation dev score",
            pseudo_disambiguation(&run),
        ),
        ("baseline equivalences", baselines()),
        ("spearman oracle", spearman_oracle()),
        ("ensemble arithmetic", ensemble_arithmetic()),
        ("initialization alpha", initialization()),
        ("determinism", determinism()),
        ("bootstrap sanity", bootstrap()),
    ];
    let mut failed = 0;
    for (i, (name, result)) in results.iter().enumerate() {
        let (tag, detail) = match result {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("{tag} criterion {}: {name}: {detail}", i + 1);
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
