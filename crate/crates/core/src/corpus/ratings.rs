//! Readers for human-rating datasets.
//!
//! Compositionality ratings: `verb\tobject\trating`, one judgment per line;
//! repeated pairs accumulate several ratings. Disambiguation ratings:
//! `id\tverb\tsubject\tobject\tlandmark\trating`. In both formats blank lines
//! and `#` comments are skipped, and a first line whose rating column is not
//! numeric is treated as a header.

use std::collections::HashMap;
use std::io::BufRead;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct RatingItem {
    pub verb: String,
    pub object: String,
    pub ratings: Vec<f64>,
}

impl RatingItem {
    pub fn mean_rating(&self) -> f64 {
        self.ratings.iter().sum::<f64>() / self.ratings.len() as f64
    }

    pub fn label(&self) -> String {
        format!("{} {}", self.verb, self.object)
    }
}

/// Verb-object pairs with human compositionality ratings.
#[derive(Clone, Debug, PartialEq)]
pub struct RatingDataset {
    pub tag: String,
    pub scale: (f64, f64),
    pub items: Vec<RatingItem>,
}

/// Default compositionality rating scale.
pub const RATING_SCALE: (f64, f64) = (1.0, 6.0);

impl RatingDataset {
    pub fn parse<R: BufRead>(reader: R, tag: &str) -> Result<Self> {
        Self::parse_with_scale(reader, tag, RATING_SCALE)
    }

    pub fn parse_with_scale<R: BufRead>(reader: R, tag: &str, scale: (f64, f64)) -> Result<Self> {
        let mut items: Vec<RatingItem> = Vec::new();
        let mut index: HashMap<(String, String), usize> = HashMap::new();
        for (line_no, fields) in data_lines(reader, 3)? {
            let rating = parse_rating(&fields[2], line_no)?;
            if !(scale.0..=scale.1).contains(&rating) {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("rating {rating} outside scale {}..{}", scale.0, scale.1),
                });
            }
            let key = (fields[0].clone(), fields[1].clone());
            match index.get(&key) {
                Some(&i) => items[i].ratings.push(rating),
                None => {
                    index.insert(key.clone(), items.len());
                    items.push(RatingItem {
                        verb: key.0,
                        object: key.1,
                        ratings: vec![rating],
                    });
                }
            }
        }
        Ok(Self {
            tag: tag.to_owned(),
            scale,
            items,
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Judgment {
    pub id: String,
    pub verb: String,
    pub subject: String,
    pub object: String,
    pub landmark: String,
    pub rating: f64,
}

/// Target/landmark verb pair sharing a subject and object, with every human
/// rating given to it.
#[derive(Clone, Debug, PartialEq)]
pub struct DisambigGroup {
    pub verb: String,
    pub subject: String,
    pub object: String,
    pub landmark: String,
    pub ratings: Vec<f64>,
}

impl DisambigGroup {
    pub fn label(&self) -> String {
        format!(
            "{} {} {} {}",
            self.subject, self.verb, self.object, self.landmark
        )
    }

    pub fn mean_rating(&self) -> f64 {
        self.ratings.iter().sum::<f64>() / self.ratings.len() as f64
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DisambigDataset {
    pub tag: String,
    pub judgments: Vec<Judgment>,
}

impl DisambigDataset {
    pub fn parse<R: BufRead>(reader: R, tag: &str) -> Result<Self> {
        let mut judgments = Vec::new();
        for (line_no, f) in data_lines(reader, 6)? {
            let rating = parse_rating(&f[5], line_no)?;
            let [id, verb, subject, object, landmark, _]: [String; 6] =
                f.try_into().expect("width checked");
            judgments.push(Judgment {
                id,
                verb,
                subject,
                object,
                landmark,
                rating,
            });
        }
        Ok(Self {
            tag: tag.to_owned(),
            judgments,
        })
    }

    /// Judgments grouped by (verb, subject, object, landmark), first-seen order.
    pub fn groups(&self) -> Vec<DisambigGroup> {
        let mut groups: Vec<DisambigGroup> = Vec::new();
        let mut index: HashMap<(&str, &str, &str, &str), usize> = HashMap::new();
        for j in &self.judgments {
            let key = (
                j.verb.as_str(),
                j.subject.as_str(),
                j.object.as_str(),
                j.landmark.as_str(),
            );
            match index.get(&key) {
                Some(&i) => groups[i].ratings.push(j.rating),
                None => {
                    index.insert(key, groups.len());
                    groups.push(DisambigGroup {
                        verb: j.verb.clone(),
                        subject: j.subject.clone(),
                        object: j.object.clone(),
                        landmark: j.landmark.clone(),
                        ratings: vec![j.rating],
                    });
                }
            }
        }
        groups
    }
}

fn parse_rating(field: &str, line: usize) -> Result<f64> {
    match field.trim().parse::<f64>() {
        Ok(r) if r.is_finite() => Ok(r),
        _ => Err(Error::Parse {
            line,
            message: format!("rating `{field}` is not a number"),
        }),
    }
}

/// Non-comment lines split on tabs, with an optional header dropped.
fn data_lines<R: BufRead>(reader: R, width: usize) -> Result<Vec<(usize, Vec<String>)>> {
    let mut out = Vec::new();
    let mut first = true;
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim_end_matches('\r');
        if trimmed.trim().is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let line_no = idx + 1;
        let fields: Vec<String> = trimmed.split('\t').map(|s| s.trim().to_owned()).collect();
        if fields.len() != width || fields.iter().any(String::is_empty) {
            return Err(Error::Parse {
                line: line_no,
                message: format!(
                    "expected {width} tab-separated fields, found {}",
                    fields.len()
                ),
            });
        }
        let is_header = first && fields[width - 1].parse::<f64>().is_err();
        first = false;
        if is_header {
            continue;
        }
        out.push((line_no, fields));
    }
    Ok(out)
}
