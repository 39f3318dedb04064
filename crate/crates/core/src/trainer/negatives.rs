use rand::Rng;

use crate::corpus::{Lexicon, Split, Svo, Svopn, TupleCorpus};
use crate::error::{Error, Result};

/// A training or evaluation tuple.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Instance {
    Svo(Svo),
    Svopn(Svopn),
}

/// Corruptions of an observed `(p, a1, a2)` tuple, in order: predicate,
/// first argument, second argument. For SVO that is `(V', S', O')`; for
/// SVOPN it is `(P', SVO', N')`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct NegativeSamples(pub [Instance; 3]);

/// Uniform corruption sampler over the type-compatible vocabulary.
#[derive(Clone, Debug)]
pub struct NegativeSampler {
    n_nouns: u32,
    n_verbs: u32,
    n_preps: u32,
    train_svo: Vec<Svo>,
    distinct_svo: bool,
}

impl NegativeSampler {
    pub fn new(lexicon: &Lexicon, corpus: &TupleCorpus) -> Self {
        let train_svo: Vec<Svo> = corpus.svo_in(Split::Train).copied().collect();
        let distinct_svo = train_svo.iter().any(|t| *t != train_svo[0]);
        Self {
            n_nouns: lexicon.nouns.len() as u32,
            n_verbs: lexicon.verbs.len() as u32,
            n_preps: lexicon.preps.len() as u32,
            train_svo,
            distinct_svo,
        }
    }

    pub fn sample<R: Rng + ?Sized>(
        &self,
        observed: &Instance,
        rng: &mut R,
    ) -> Result<NegativeSamples> {
        match *observed {
            Instance::Svo(t) => {
                let verb = other(self.n_verbs, t.verb, "verb", rng)?;
                let subject = other(self.n_nouns, t.subject, "subject", rng)?;
                let object = other(self.n_nouns, t.object, "object", rng)?;
                Ok(NegativeSamples([
                    Instance::Svo(Svo { verb, ..t }),
                    Instance::Svo(Svo { subject, ..t }),
                    Instance::Svo(Svo { object, ..t }),
                ]))
            }
            Instance::Svopn(t) => {
                let prep = other(self.n_preps, t.prep, "preposition", rng)?;
                let svo = self.other_svo(t.svo, rng)?;
                let noun = other(self.n_nouns, t.noun, "noun", rng)?;
                Ok(NegativeSamples([
                    Instance::Svopn(Svopn { prep, ..t }),
                    Instance::Svopn(Svopn { svo, ..t }),
                    Instance::Svopn(Svopn { noun, ..t }),
                ]))
            }
        }
    }

    /// A uniformly drawn observed training SVO tuple different from `svo`.
    fn other_svo<R: Rng + ?Sized>(&self, svo: Svo, rng: &mut R) -> Result<Svo> {
        let usable = match self.train_svo.first() {
            None => false,
            Some(first) => self.distinct_svo || *first != svo,
        };
        if !usable {
            return Err(Error::Sampling {
                slot: "SVO",
                reason: "no other observed training SVO tuple".into(),
            });
        }
        loop {
            let cand = self.train_svo[rng.random_range(0..self.train_svo.len())];
            if cand != svo {
                return Ok(cand);
            }
        }
    }
}

/// Uniform draw from `[0, size)` excluding `current`.
fn other<R: Rng + ?Sized>(size: u32, current: u32, slot: &'static str, rng: &mut R) -> Result<u32> {
    if size < 2 {
        return Err(Error::Sampling {
            slot,
            reason: format!("vocabulary has {size} entries"),
        });
    }
    let r = rng.random_range(0..size - 1);
    Ok(if r >= current { r + 1 } else { r })
}
