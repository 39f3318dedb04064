use crate::error::{Error, Result};
use crate::model::{cosine, Model};

/// A verb-object phrase or a full SVO tuple, by word ids.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Query {
    Phrase {
        verb: u32,
        object: u32,
    },
    Svo {
        subject: u32,
        verb: u32,
        object: u32,
    },
}

impl Query {
    /// `"verb object"` or `"subject verb object"`; unknown words are errors
    /// naming the token.
    pub fn parse(model: &Model, text: &str) -> Result<Self> {
        let lex = &model.lexicon;
        match text.split_whitespace().collect::<Vec<_>>()[..] {
            [v, o] => Ok(Query::Phrase {
                verb: lex.verb(v)?,
                object: lex.noun(o)?,
            }),
            [s, v, o] => Ok(Query::Svo {
                subject: lex.noun(s)?,
                verb: lex.verb(v)?,
                object: lex.noun(o)?,
            }),
            _ => Err(Error::Config(format!(
                "query `{text}` must be `verb object` or `subject verb object`"
            ))),
        }
    }

    pub fn label(&self, model: &Model) -> String {
        let lex = &model.lexicon;
        match *self {
            Query::Phrase { verb, object } => lex.phrase_label(verb, object),
            Query::Svo {
                subject,
                verb,
                object,
            } => format!(
                "{} {}",
                lex.nouns.word(subject).unwrap_or("?"),
                lex.phrase_label(verb, object)
            ),
        }
    }

    pub fn embed(&self, model: &Model) -> Result<Vec<f64>> {
        match *self {
            Query::Phrase { verb, object } => Ok(model.vo_embedding(verb, object)?.v),
            Query::Svo {
                subject,
                verb,
                object,
            } => model.svo_vector(subject, verb, object),
        }
    }
}

/// The candidate phrases of `model` as a neighbor pool.
pub fn candidate_pool(model: &Model) -> Vec<Query> {
    model
        .candidates
        .phrases()
        .iter()
        .map(|&(verb, object)| Query::Phrase { verb, object })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct Neighbor {
    pub label: String,
    pub similarity: f64,
}

/// Top `k` pool entries by cosine similarity to `query`, excluding the query
/// itself. Ties are ordered by label; `k` beyond the pool returns it all.
pub fn nearest_neighbors(
    model: &Model,
    query: &Query,
    k: usize,
    pool: &[Query],
) -> Result<Vec<Neighbor>> {
    if pool.is_empty() {
        return Err(Error::Eval("neighbor pool is empty".into()));
    }
    let q = query.embed(model)?;
    let mut ranked = Vec::with_capacity(pool.len());
    for item in pool.iter().filter(|p| *p != query) {
        ranked.push(Neighbor {
            label: item.label(model),
            similarity: cosine(&q, &item.embed(model)?),
        });
    }
    ranked.sort_by(|a, b| {
        b.similarity
            .total_cmp(&a.similarity)
            .then_with(|| a.label.cmp(&b.label))
    });
    ranked.truncate(k);
    Ok(ranked)
}
