use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use crate::error::{Error, Result};

/// Item label to score.
pub type ScoreTable = BTreeMap<String, f64>;

#[derive(Clone, Debug, PartialEq)]
pub struct Ensemble {
    pub scores: ScoreTable,
    /// Labels present in some but not all inputs.
    pub dropped: Vec<String>,
}

/// Element-wise mean over the labels shared by every table.
pub fn ensemble_scores(tables: &[ScoreTable]) -> Result<Ensemble> {
    let Some((first, rest)) = tables.split_first() else {
        return Err(Error::Eval("no score tables to ensemble".into()));
    };
    let mut scores = ScoreTable::new();
    let mut dropped = std::collections::BTreeSet::new();
    for (label, &x) in first {
        let mut sum = x;
        let mut shared = true;
        for t in rest {
            match t.get(label) {
                Some(y) => sum += y,
                None => shared = false,
            }
        }
        if shared {
            scores.insert(label.clone(), sum / tables.len() as f64);
        } else {
            dropped.insert(label.clone());
        }
    }
    for t in rest {
        dropped.extend(t.keys().filter(|k| !scores.contains_key(*k)).cloned());
    }
    if scores.is_empty() {
        return Err(Error::Eval("score tables share no item".into()));
    }
    Ok(Ensemble {
        scores,
        dropped: dropped.into_iter().collect(),
    })
}

/// Write `label\tscore` lines with full round-trip precision.
pub fn write_dump<W: Write>(table: &ScoreTable, mut out: W) -> std::io::Result<()> {
    for (label, score) in table {
        writeln!(out, "{label}\t{score:?}")?;
    }
    Ok(())
}

/// Read a dump produced by [`write_dump`]; `#` lines are comments.
pub fn read_dump<R: BufRead>(reader: R) -> Result<ScoreTable> {
    let mut table = ScoreTable::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let parse_err = |message: String| Error::Parse {
            line: i + 1,
            message,
        };
        let (label, score) = line
            .rsplit_once('\t')
            .ok_or_else(|| parse_err("expected `label<TAB>score`".into()))?;
        let score: f64 = score
            .trim()
            .parse()
            .map_err(|_| parse_err(format!("invalid score `{score}`")))?;
        if table.insert(label.to_owned(), score).is_some() {
            return Err(parse_err(format!("duplicate label `{label}`")));
        }
    }
    Ok(table)
}
