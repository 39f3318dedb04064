//! Correlation of model outputs with human judgments.

use std::collections::BTreeMap;

use super::ensemble::ScoreTable;
use super::spearman::spearman;
use crate::corpus::ratings::{DisambigDataset, DisambigGroup, RatingDataset};
use crate::error::{Error, Result};
use crate::model::{cosine, Model};

/// How multiple human ratings of one disambiguation item are used.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RatingMode {
    /// One point per item, correlated with the mean rating.
    Averaged,
    /// One point per judgment; the model similarity is repeated.
    PerRating,
}

impl RatingMode {
    pub fn tag(self) -> &'static str {
        match self {
            RatingMode::Averaged => "averaged",
            RatingMode::PerRating => "per-rating",
        }
    }
}

/// A model score paired with its gold rating(s).
#[derive(Clone, Debug, PartialEq)]
pub struct ScoredItem {
    pub label: String,
    pub ratings: Vec<f64>,
    pub score: f64,
}

impl ScoredItem {
    pub fn mean_rating(&self) -> f64 {
        self.ratings.iter().sum::<f64>() / self.ratings.len() as f64
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Evaluation {
    pub rho: f64,
    pub items: Vec<ScoredItem>,
    /// Items that entered the correlation.
    pub covered: usize,
    pub total: usize,
}

impl Evaluation {
    /// (gold, predicted) points under `mode`.
    pub fn points(&self, mode: RatingMode) -> Vec<(f64, f64)> {
        points(&self.items, mode)
    }

    pub fn score_table(&self) -> ScoreTable {
        self.items
            .iter()
            .map(|i| (i.label.clone(), i.score))
            .collect()
    }
}

fn points(items: &[ScoredItem], mode: RatingMode) -> Vec<(f64, f64)> {
    match mode {
        RatingMode::Averaged => items.iter().map(|i| (i.mean_rating(), i.score)).collect(),
        RatingMode::PerRating => items
            .iter()
            .flat_map(|i| i.ratings.iter().map(move |&r| (r, i.score)))
            .collect(),
    }
}

/// Spearman correlation of the points of `items` under `mode`.
pub fn correlate(items: &[ScoredItem], mode: RatingMode) -> Result<f64> {
    let (gold, pred): (Vec<f64>, Vec<f64>) = points(items, mode).into_iter().unzip();
    spearman(&gold, &pred)
}

/// Correlate alpha with mean human compositionality ratings.
///
/// Pairs whose verb or object is outside the lexicon are skipped and
/// reported through `covered`; in-lexicon non-candidates are scored from
/// their partial features.
pub fn eval_compositionality(model: &Model, dataset: &RatingDataset) -> Result<Evaluation> {
    if dataset.items.is_empty() {
        return Err(Error::Eval(format!("dataset `{}` is empty", dataset.tag)));
    }
    let mut table = ScoreTable::new();
    for item in &dataset.items {
        let (Some(v), Some(o)) = (
            model.lexicon.verbs.id(&item.verb),
            model.lexicon.nouns.id(&item.object),
        ) else {
            continue;
        };
        table.insert(item.label(), model.alpha(Some(v), Some(o)));
    }
    compositionality_against(dataset, &table)
}

/// Correlate an externally produced phrase score table with a rating dataset.
pub fn compositionality_against(dataset: &RatingDataset, table: &ScoreTable) -> Result<Evaluation> {
    if dataset.items.is_empty() {
        return Err(Error::Eval(format!("dataset `{}` is empty", dataset.tag)));
    }
    let items: Vec<ScoredItem> = dataset
        .items
        .iter()
        .filter_map(|item| {
            table.get(&item.label()).map(|&score| ScoredItem {
                label: item.label(),
                ratings: item.ratings.clone(),
                score,
            })
        })
        .collect();
    finish(items, dataset.items.len(), RatingMode::Averaged)
}

/// Cosine similarity between `v(S V O)` and `v(S L O)` for one group, or
/// `None` if any word is out of the lexicon.
pub fn group_similarity(model: &Model, group: &DisambigGroup) -> Option<f64> {
    let lex = &model.lexicon;
    let s = lex.nouns.id(&group.subject)?;
    let o = lex.nouns.id(&group.object)?;
    let v = lex.verbs.id(&group.verb)?;
    let l = lex.verbs.id(&group.landmark)?;
    let target = model.svo_vector(s, v, o).ok()?;
    let landmark = model.svo_vector(s, l, o).ok()?;
    Some(cosine(&target, &landmark))
}

/// Correlate target/landmark SVO cosine similarities with human ratings.
pub fn eval_disambiguation(
    model: &Model,
    dataset: &DisambigDataset,
    mode: RatingMode,
) -> Result<Evaluation> {
    let table: ScoreTable = dataset
        .groups()
        .iter()
        .filter_map(|g| group_similarity(model, g).map(|s| (g.label(), s)))
        .collect();
    disambiguation_against(dataset, &table, mode)
}

pub fn disambiguation_against(
    dataset: &DisambigDataset,
    table: &ScoreTable,
    mode: RatingMode,
) -> Result<Evaluation> {
    let groups = dataset.groups();
    if groups.is_empty() {
        return Err(Error::Eval(format!("dataset `{}` is empty", dataset.tag)));
    }
    let items: Vec<ScoredItem> = groups
        .iter()
        .filter_map(|g| {
            table.get(&g.label()).map(|&score| ScoredItem {
                label: g.label(),
                ratings: g.ratings.clone(),
                score,
            })
        })
        .collect();
    finish(items, groups.len(), mode)
}

fn finish(items: Vec<ScoredItem>, total: usize, mode: RatingMode) -> Result<Evaluation> {
    if items.is_empty() {
        return Err(Error::Eval(
            "no dataset item is covered by the model".into(),
        ));
    }
    let rho = correlate(&items, mode)?;
    Ok(Evaluation {
        rho,
        covered: items.len(),
        total,
        items,
    })
}

/// Mean candidate alpha per verb, for verbs with more than
/// `min_object_types` distinct candidate objects.
pub fn per_verb_average_alpha(model: &Model, min_object_types: usize) -> BTreeMap<String, f64> {
    let mut by_verb: BTreeMap<u32, Vec<f64>> = BTreeMap::new();
    for (p, &(v, _)) in model.candidates.phrases().iter().enumerate() {
        by_verb
            .entry(v)
            .or_default()
            .push(model.candidate_alpha(p as u32));
    }
    by_verb
        .into_iter()
        .filter(|(_, alphas)| alphas.len() > min_object_types)
        .map(|(v, alphas)| {
            let word = model.lexicon.verbs.word(v).unwrap_or("?").to_owned();
            (word, alphas.iter().sum::<f64>() / alphas.len() as f64)
        })
        .collect()
}

/// Verb and average alpha, in rank order.
pub type Ranked = Vec<(String, f64)>;

/// The `n` highest and `n` lowest entries, highest first and lowest first
/// respectively; ties ordered by verb.
pub fn extremes(averages: &BTreeMap<String, f64>, n: usize) -> (Ranked, Ranked) {
    let mut sorted: Vec<(String, f64)> = averages.iter().map(|(k, &v)| (k.clone(), v)).collect();
    sorted.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    let highest = sorted.iter().take(n).cloned().collect();
    sorted.sort_by(|a, b| a.1.total_cmp(&b.1).then_with(|| a.0.cmp(&b.0)));
    let lowest = sorted.into_iter().take(n).collect();
    (highest, lowest)
}
