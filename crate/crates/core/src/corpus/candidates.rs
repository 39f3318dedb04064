use std::collections::HashMap;

use super::VoCounts;

/// How the frequency threshold `K` is compared against a pair count.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ThresholdRule {
    /// `count(VO) > K`
    #[default]
    Strict,
    /// `count(VO) >= K`
    Inclusive,
}

impl ThresholdRule {
    fn admits(self, count: u64, k: u64) -> bool {
        match self {
            ThresholdRule::Strict => count > k,
            ThresholdRule::Inclusive => count >= k,
        }
    }
}

/// Verb-object phrases that receive their own non-compositional embedding
/// and VO indicator feature. Phrase ids are dense and follow ascending
/// (verb, object) order.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CandidateSet {
    phrases: Vec<(u32, u32)>,
    index: HashMap<(u32, u32), u32>,
    pub threshold: u64,
    pub rule: ThresholdRule,
}

impl CandidateSet {
    pub fn from_phrases(mut phrases: Vec<(u32, u32)>, threshold: u64, rule: ThresholdRule) -> Self {
        phrases.sort_unstable();
        phrases.dedup();
        let index = phrases
            .iter()
            .enumerate()
            .map(|(i, &p)| (p, i as u32))
            .collect();
        Self {
            phrases,
            index,
            threshold,
            rule,
        }
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn id(&self, verb: u32, object: u32) -> Option<u32> {
        self.index.get(&(verb, object)).copied()
    }

    pub fn phrase(&self, id: u32) -> (u32, u32) {
        self.phrases[id as usize]
    }

    pub fn phrases(&self) -> &[(u32, u32)] {
        &self.phrases
    }

    pub fn len(&self) -> usize {
        self.phrases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phrases.is_empty()
    }
}

/// Pairs observed more than `k` times in the training counts.
pub fn select_candidates(counts: &VoCounts, k: u64) -> CandidateSet {
    select_candidates_with(counts, k, ThresholdRule::Strict)
}

pub fn select_candidates_with(counts: &VoCounts, k: u64, rule: ThresholdRule) -> CandidateSet {
    let phrases = counts
        .pair
        .iter()
        .filter(|(_, &c)| rule.admits(c, k))
        .map(|(&p, _)| p)
        .collect();
    CandidateSet::from_phrases(phrases, k, rule)
}
