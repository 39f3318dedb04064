use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use vocomp::corpus::ratings::{DisambigDataset, RatingDataset};
use vocomp::corpus::{parse_tuples_into, split_corpus, Lexicon, TupleCorpus};
use vocomp::eval::{
    bootstrap_ci, candidate_pool, compositionality_against, disambiguation_against,
    ensemble_scores, eval_compositionality, eval_disambiguation, fmt_score, nearest_neighbors,
    read_dump, write_dump, Evaluation, Query, RatingMode, ReportLine, ScoreTable, REPORT_COLUMNS,
};
use vocomp::model::{export_text, load_model, save_model, write_atomic, Model};
use vocomp::trainer::{grid_search, train, write_log, TrainConfig, TrainOutcome};

use crate::config::{check_inputs, RunConfig};
use crate::{CliError, Command, Common, TrainArgs};

type CliResult<T> = Result<T, CliError>;

pub fn dispatch(command: Command) -> CliResult<()> {
    match command {
        Command::Train {
            common,
            args,
            trajectory,
        } => {
            let mut flags = train_flags(&args);
            flags.push(("trajectory", trajectory.map(path_str)));
            let cfg = resolve(&common, &flags)?;
            cmd_train(&cfg, &common)
        }
        Command::Grid {
            common,
            args,
            grid_report,
        } => {
            let mut flags = train_flags(&args);
            flags.push(("grid_report", grid_report.map(path_str)));
            let cfg = resolve(&common, &flags)?;
            cmd_grid(&cfg, &common)
        }
        Command::Eval { common, args } => {
            let cfg = resolve(
                &common,
                &[
                    ("model", args.model.map(path_str)),
                    ("task", args.task),
                    ("dataset", args.dataset.map(path_str)),
                    ("mode", args.mode),
                    ("bootstrap", args.bootstrap.map(|b| b.to_string())),
                    ("dump", args.dump.map(path_str)),
                    ("report", args.report.map(path_str)),
                ],
            )?;
            cmd_eval(&cfg)
        }
        Command::Ensemble { common, args } => {
            let cfg = resolve(
                &common,
                &[
                    ("task", args.task),
                    ("dataset", args.dataset.map(path_str)),
                    ("mode", args.mode),
                    ("bootstrap", args.bootstrap.map(|b| b.to_string())),
                    ("dump", args.dump.map(path_str)),
                    ("report", args.report.map(path_str)),
                ],
            )?;
            cmd_ensemble(&cfg, &args.dumps)
        }
        Command::Score { common, args } => {
            let cfg = resolve(
                &common,
                &[
                    ("model", args.model.map(path_str)),
                    ("report", args.report.map(path_str)),
                ],
            )?;
            let mut phrases = args.phrases;
            if let Some(path) = &args.phrase_file {
                check_inputs([path.as_path()])?;
                phrases.extend(read_lines(path, "read phrases")?);
            }
            cmd_score(&cfg, &phrases)
        }
        Command::Neighbors { common, args } => {
            let cfg = resolve(
                &common,
                &[
                    ("model", args.model.map(path_str)),
                    ("neighbors", args.k.map(|k| k.to_string())),
                    ("report", args.report.map(path_str)),
                ],
            )?;
            cmd_neighbors(&cfg, &args.query, args.pool.as_deref())
        }
        Command::Export { common, args } => {
            let cfg = resolve(&common, &[("model", args.model.map(path_str))])?;
            cmd_export(&cfg, args.out.as_deref())
        }
    }
}

fn path_str(p: PathBuf) -> String {
    p.display().to_string()
}

fn train_flags(args: &TrainArgs) -> Vec<(&'static str, Option<String>)> {
    let tuples = (!args.tuples.is_empty()).then(|| {
        args.tuples
            .iter()
            .map(|p| p.display().to_string())
            .collect::<Vec<_>>()
            .join(",")
    });
    vec![
        ("tuples", tuples),
        ("model", args.model.clone().map(path_str)),
        ("log", args.log.clone().map(path_str)),
        ("dim", args.dim.map(|d| d.to_string())),
        ("max_epochs", args.epochs.map(|e| e.to_string())),
        ("fix_alpha", args.fix_alpha.map(|a| a.to_string())),
    ]
}

/// Defaults, then the config file, then `--set`, then dedicated flags.
pub fn resolve(common: &Common, flags: &[(&str, Option<String>)]) -> CliResult<RunConfig> {
    let mut cfg = RunConfig::defaults();
    if let Some(path) = &common.config {
        check_inputs([path.as_path()])?;
        cfg.load_file(path)?;
    }
    for o in &common.overrides {
        cfg.apply_override(o)?;
    }
    if let Some(seed) = common.seed {
        cfg.set("seed", &seed.to_string())?;
    }
    for (key, value) in flags {
        if let Some(v) = value {
            cfg.set(key, v)?;
        }
    }
    if !common.quiet {
        for line in cfg.canonical().lines() {
            eprintln!("# {line}");
        }
    }
    Ok(cfg)
}

/// `#` lines carrying version, command, seed and config hash.
pub fn header(cfg: &RunConfig, command: &str) -> String {
    format!(
        "# vocomp {}\n# command={command}\n# seed={}\n# config_hash={}\n",
        env!("CARGO_PKG_VERSION"),
        cfg.get("seed"),
        cfg.hash()
    )
}

/// Atomically write `text` to `path`, or print it to stdout.
fn emit(path: Option<&Path>, text: &str) -> CliResult<()> {
    match path {
        Some(p) => write_atomic(p, text.as_bytes()).map_err(|e| CliError::stage("write output", e)),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|e| CliError::stage("write output", e.into()))
        }
    }
}

fn open(path: &Path, stage: &str) -> CliResult<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|source| {
        CliError::stage(
            stage,
            vocomp::Error::File {
                path: path.to_owned(),
                source,
            },
        )
    })
}

fn read_lines(path: &Path, stage: &str) -> CliResult<Vec<String>> {
    let lines: std::io::Result<Vec<String>> = open(path, stage)?.lines().collect();
    Ok(lines
        .map_err(|e| CliError::stage(stage, e.into()))?
        .into_iter()
        .map(|l| l.trim().to_owned())
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .collect())
}

fn ingest(paths: &[PathBuf]) -> CliResult<(TupleCorpus, Lexicon)> {
    let mut lexicon = Lexicon::default();
    let mut corpus = TupleCorpus::default();
    for path in paths {
        let stats = parse_tuples_into(&mut lexicon, &mut corpus, open(path, "ingest")?)
            .and_then(|s| s.check().map(|_| s))
            .map_err(|e| CliError::stage(&format!("ingest {}", path.display()), e))?;
        eprintln!(
            "ingest {}: {} SVO, {} SVOPN, {} malformed",
            path.display(),
            stats.svo,
            stats.svopn,
            stats.malformed.len()
        );
    }
    if corpus.is_empty() {
        return Err(CliError::usage("ingest: no tuples in the input files"));
    }
    Ok((corpus, lexicon))
}

/// Ingest and split the tuples; counts come from the training split only.
fn prepare(cfg: &RunConfig) -> CliResult<(TupleCorpus, Lexicon, TrainConfig)> {
    let paths = cfg.tuple_paths()?;
    check_inputs(paths.iter().map(PathBuf::as_path))?;
    cfg.require("model")?;
    let mut train_config = cfg.train_config()?;
    let ratios = cfg.split_ratios()?;
    let (mut corpus, mut lexicon) = ingest(&paths)?;
    split_corpus(&mut corpus, ratios, cfg.split_seed()?)
        .map_err(|e| CliError::stage("split", e))?;
    lexicon.count_training(&corpus);
    train_config.track = cfg
        .list::<String>("track")?
        .iter()
        .map(|p| parse_phrase_ids(&lexicon, p))
        .collect::<CliResult<_>>()?;
    Ok((corpus, lexicon, train_config))
}

fn parse_phrase_ids(lexicon: &Lexicon, phrase: &str) -> CliResult<(u32, u32)> {
    let (v, o) = split_phrase(phrase)?;
    let ids = lexicon.verb(v).and_then(|v| Ok((v, lexicon.noun(o)?)));
    ids.map_err(|e| CliError::stage("track", e))
}

fn split_phrase(phrase: &str) -> CliResult<(&str, &str)> {
    match phrase.split_whitespace().collect::<Vec<_>>()[..] {
        [v, o] => Ok((v, o)),
        _ => Err(CliError::usage(format!(
            "phrase `{phrase}` must be `verb object`"
        ))),
    }
}

fn log_path(cfg: &RunConfig) -> CliResult<PathBuf> {
    Ok(match cfg.path("log") {
        Some(p) => p,
        None => PathBuf::from(format!("{}.log", cfg.require("model")?)),
    })
}

fn save_outcome(cfg: &RunConfig, command: &str, outcome: &TrainOutcome) -> CliResult<()> {
    let model_path = PathBuf::from(cfg.require("model")?);
    save_model(&outcome.model, &model_path).map_err(|e| CliError::stage("save model", e))?;

    let mut log = header(cfg, command);
    for line in cfg.canonical().lines() {
        let _ = writeln!(log, "# {line}");
    }
    let _ = writeln!(log, "# best_epoch={}", outcome.best_epoch);
    log.push_str("epoch\ttrain_cost\tdev_score\tmean_alpha\n");
    let mut body = Vec::new();
    write_log(&outcome.log, &mut body).map_err(|e| CliError::stage("save log", e))?;
    log.push_str(&String::from_utf8_lossy(&body));
    write_atomic(&log_path(cfg)?, log.as_bytes()).map_err(|e| CliError::stage("save log", e))?;

    if let Some(path) = cfg.path("trajectory") {
        let mut text = header(cfg, command);
        text.push_str("epoch\tphrase\talpha\n");
        let mut body = Vec::new();
        outcome
            .trajectory
            .write_tsv(&outcome.model.lexicon, &mut body)
            .map_err(|e| CliError::stage("save trajectory", e))?;
        text.push_str(&String::from_utf8_lossy(&body));
        write_atomic(&path, text.as_bytes()).map_err(|e| CliError::stage("save trajectory", e))?;
    }
    eprintln!(
        "{} candidates; best epoch {} of {}, dev score {:.4}; model written to {}",
        outcome.model.candidates.len(),
        outcome.best_epoch,
        outcome.log.len(),
        outcome.best_dev_score,
        model_path.display()
    );
    Ok(())
}

pub fn cmd_train(cfg: &RunConfig, _common: &Common) -> CliResult<()> {
    let (corpus, lexicon, train_config) = prepare(cfg)?;
    let outcome =
        train(&corpus, &lexicon, &train_config).map_err(|e| CliError::stage("train", e))?;
    save_outcome(cfg, "train", &outcome)
}

pub fn cmd_grid(cfg: &RunConfig, _common: &Common) -> CliResult<()> {
    let (corpus, lexicon, base) = prepare(cfg)?;
    let (lrs, l2s) = cfg.grid()?;
    let result = grid_search(&corpus, &lexicon, &base, &lrs, &l2s)
        .map_err(|e| CliError::stage("grid", e))?;
    let mut report = header(cfg, "grid");
    report.push_str("learning_rate\tl2\tdev_score\tbest_epoch\tselected\n");
    for (i, c) in result.cells.iter().enumerate() {
        let _ = writeln!(
            report,
            "{}\t{}\t{:.4}\t{}\t{}",
            c.learning_rate,
            c.l2,
            c.dev_score,
            c.best_epoch,
            u8::from(i == result.best)
        );
    }
    let grid_path = match cfg.path("grid_report") {
        Some(p) => p,
        None => PathBuf::from(format!("{}.grid", cfg.require("model")?)),
    };
    write_atomic(&grid_path, report.as_bytes())
        .map_err(|e| CliError::stage("save grid report", e))?;
    let best = &result.cells[result.best];
    eprintln!(
        "selected learning rate {} and l2 {}",
        best.learning_rate, best.l2
    );
    save_outcome(cfg, "grid", &result.best_outcome)
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Task {
    Comp,
    Disambig,
}

fn task(cfg: &RunConfig) -> CliResult<Task> {
    match cfg.get("task") {
        "comp" => Ok(Task::Comp),
        "disambig" => Ok(Task::Disambig),
        other => Err(CliError::usage(format!(
            "`task` must be comp or disambig, got `{other}`"
        ))),
    }
}

fn modes(cfg: &RunConfig) -> CliResult<Vec<RatingMode>> {
    match cfg.get("mode") {
        "both" => Ok(vec![RatingMode::Averaged, RatingMode::PerRating]),
        "averaged" => Ok(vec![RatingMode::Averaged]),
        "per-rating" => Ok(vec![RatingMode::PerRating]),
        other => Err(CliError::usage(format!(
            "`mode` must be averaged, per-rating or both, got `{other}`"
        ))),
    }
}

fn dataset_tag(cfg: &RunConfig, path: &Path) -> String {
    match cfg.opt("tag") {
        Some(t) => t.to_owned(),
        None => path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "dataset".into()),
    }
}

enum Gold {
    Ratings(RatingDataset),
    Judgments(DisambigDataset),
}

fn load_gold(cfg: &RunConfig) -> CliResult<Gold> {
    let path = PathBuf::from(cfg.require("dataset")?);
    check_inputs([path.as_path()])?;
    let tag = dataset_tag(cfg, &path);
    let reader = open(&path, "load dataset")?;
    let stage = |e| CliError::stage(&format!("load dataset {}", path.display()), e);
    Ok(match task(cfg)? {
        Task::Comp => Gold::Ratings(RatingDataset::parse(reader, &tag).map_err(stage)?),
        Task::Disambig => Gold::Judgments(DisambigDataset::parse(reader, &tag).map_err(stage)?),
    })
}

fn load(cfg: &RunConfig) -> CliResult<Model> {
    let path = PathBuf::from(cfg.require("model")?);
    check_inputs([path.as_path()])?;
    load_model(&path).map_err(|e| CliError::stage("load model", e))
}

/// Evaluate with `score` under each applicable mode and format the report.
fn report_lines(
    cfg: &RunConfig,
    gold: &Gold,
    mut score: impl FnMut(RatingMode) -> vocomp::Result<Evaluation>,
) -> CliResult<(Vec<ReportLine>, ScoreTable)> {
    let (tag, modes) = match gold {
        Gold::Ratings(d) => (d.tag.clone(), vec![RatingMode::Averaged]),
        Gold::Judgments(d) => (d.tag.clone(), modes(cfg)?),
    };
    let replicates: usize = cfg.parse("bootstrap")?;
    let level: f64 = cfg.parse("level")?;
    let seed = cfg.seed()?;
    let mut lines = Vec::new();
    let mut table = ScoreTable::new();
    for mode in modes {
        let ev = score(mode).map_err(|e| CliError::stage("evaluate", e))?;
        let ci = if replicates == 0 {
            None
        } else {
            let ci = bootstrap_ci(&ev.points(mode), replicates, level, seed)
                .map_err(|e| CliError::stage("bootstrap", e))?;
            if ci.skipped > 0 {
                eprintln!("bootstrap: {} constant resamples skipped", ci.skipped);
            }
            Some((ci.lo, ci.hi))
        };
        let metric = match gold {
            Gold::Ratings(_) => "spearman".to_owned(),
            Gold::Judgments(_) => format!("spearman-{}", mode.tag()),
        };
        lines.push(ReportLine {
            metric,
            dataset: tag.clone(),
            value: ev.rho,
            ci,
            covered: ev.covered,
            total: ev.total,
        });
        table = ev.score_table();
    }
    Ok((lines, table))
}

fn render(cfg: &RunConfig, command: &str, extra: &[String], lines: &[ReportLine]) -> String {
    let mut text = header(cfg, command);
    for e in extra {
        let _ = writeln!(text, "# {e}");
    }
    let _ = writeln!(text, "{REPORT_COLUMNS}");
    for l in lines {
        let _ = writeln!(text, "{l}");
    }
    text
}

fn write_score_dump(cfg: &RunConfig, command: &str, table: &ScoreTable) -> CliResult<()> {
    if let Some(path) = cfg.path("dump") {
        let mut bytes = header(cfg, command).into_bytes();
        write_dump(table, &mut bytes).map_err(|e| CliError::stage("write dump", e.into()))?;
        write_atomic(&path, &bytes).map_err(|e| CliError::stage("write dump", e))?;
    }
    Ok(())
}

pub fn cmd_eval(cfg: &RunConfig) -> CliResult<()> {
    let model = load(cfg)?;
    let gold = load_gold(cfg)?;
    let (lines, table) = report_lines(cfg, &gold, |mode| match &gold {
        Gold::Ratings(d) => eval_compositionality(&model, d),
        Gold::Judgments(d) => eval_disambiguation(&model, d, mode),
    })?;
    write_score_dump(cfg, "eval", &table)?;
    emit(
        cfg.path("report").as_deref(),
        &render(cfg, "eval", &[], &lines),
    )
}

pub fn cmd_ensemble(cfg: &RunConfig, dumps: &[PathBuf]) -> CliResult<()> {
    if dumps.len() < 2 {
        return Err(CliError::usage("ensemble needs at least two dumps"));
    }
    check_inputs(dumps.iter().map(PathBuf::as_path))?;
    let tables = dumps
        .iter()
        .map(|p| {
            read_dump(open(p, "read dump")?)
                .map_err(|e| CliError::stage(&format!("read dump {}", p.display()), e))
        })
        .collect::<CliResult<Vec<_>>>()?;
    let ensemble = ensemble_scores(&tables).map_err(|e| CliError::stage("ensemble", e))?;
    let gold = load_gold(cfg)?;
    let (lines, _) = report_lines(cfg, &gold, |mode| match &gold {
        Gold::Ratings(d) => compositionality_against(d, &ensemble.scores),
        Gold::Judgments(d) => disambiguation_against(d, &ensemble.scores, mode),
    })?;
    if !ensemble.dropped.is_empty() {
        eprintln!(
            "ensemble: {} items not shared by every dump were dropped",
            ensemble.dropped.len()
        );
    }
    write_score_dump(cfg, "ensemble", &ensemble.scores)?;
    let extra = vec![
        format!("inputs={}", dumps.len()),
        format!(
            "shared={} dropped={}",
            ensemble.scores.len(),
            ensemble.dropped.len()
        ),
    ];
    emit(
        cfg.path("report").as_deref(),
        &render(cfg, "ensemble", &extra, &lines),
    )
}

pub fn cmd_score(cfg: &RunConfig, phrases: &[String]) -> CliResult<()> {
    if phrases.is_empty() {
        return Err(CliError::usage("no phrases to score"));
    }
    let model = load(cfg)?;
    let mut text = header(cfg, "score");
    text.push_str("phrase\talpha\n");
    for p in phrases {
        let (v, o) = split_phrase(p)?;
        let _ = writeln!(text, "{v} {o}\t{}", fmt_score(model.alpha_for_words(v, o)));
    }
    emit(cfg.path("report").as_deref(), &text)
}

pub fn cmd_neighbors(cfg: &RunConfig, query: &str, pool_file: Option<&Path>) -> CliResult<()> {
    let k: usize = cfg.parse("neighbors")?;
    let model = load(cfg)?;
    let q = Query::parse(&model, query).map_err(|e| CliError::stage("query", e))?;
    let pool = match pool_file {
        Some(path) => {
            check_inputs([path])?;
            read_lines(path, "read pool")?
                .iter()
                .map(|l| Query::parse(&model, l).map_err(|e| CliError::stage("pool", e)))
                .collect::<CliResult<Vec<_>>>()?
        }
        None => candidate_pool(&model),
    };
    let found =
        nearest_neighbors(&model, &q, k, &pool).map_err(|e| CliError::stage("neighbors", e))?;
    let mut text = header(cfg, "neighbors");
    let _ = writeln!(text, "# query={}", q.label(&model));
    text.push_str("neighbor\tsimilarity\n");
    for n in found {
        let _ = writeln!(text, "{}\t{:.4}", n.label, n.similarity);
    }
    emit(cfg.path("report").as_deref(), &text)
}

pub fn cmd_export(cfg: &RunConfig, out: Option<&Path>) -> CliResult<()> {
    let model = load(cfg)?;
    let mut bytes = Vec::new();
    export_text(&model, &mut bytes).map_err(|e| CliError::stage("export", e))?;
    emit(out, &String::from_utf8_lossy(&bytes))
}
