//! Tuple ingestion, lexicon construction, data splits, candidate phrases and
//! compositionality features.

mod candidates;
mod features;
pub mod ratings;

use std::collections::HashMap;
use std::io::{BufRead, Write};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

pub use candidates::{select_candidates, select_candidates_with, CandidateSet, ThresholdRule};
pub use features::{
    build_feature_table, freq_feature, pmi_feature, FeatureLayout, PhraseFeatureTable, SparseVector,
};

/// Fraction of malformed lines above which ingestion fails.
pub const MALFORMED_LIMIT: f64 = 0.01;

/// Dense string interner. Ids are assigned in first-seen order.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Vocab {
    ids: HashMap<String, u32>,
    words: Vec<String>,
}

impl Vocab {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_words<I, S>(words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut vocab = Self::new();
        for w in words {
            vocab.intern(&w.into());
        }
        vocab
    }

    pub fn intern(&mut self, word: &str) -> u32 {
        if let Some(&id) = self.ids.get(word) {
            return id;
        }
        let id = self.words.len() as u32;
        self.ids.insert(word.to_owned(), id);
        self.words.push(word.to_owned());
        id
    }

    pub fn id(&self, word: &str) -> Option<u32> {
        self.ids.get(word).copied()
    }

    pub fn word(&self, id: u32) -> Option<&str> {
        self.words.get(id as usize).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Svo {
    pub subject: u32,
    pub verb: u32,
    pub object: u32,
}

impl Svo {
    pub fn new(subject: u32, verb: u32, object: u32) -> Self {
        Self {
            subject,
            verb,
            object,
        }
    }
}

/// An SVO tuple modified by a prepositional phrase: `(SVO, P, N)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Svopn {
    pub svo: Svo,
    pub prep: u32,
    pub noun: u32,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Split {
    Train,
    Dev,
    Test,
}

/// Id-encoded SVO and SVOPN tuples with their split assignment.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TupleCorpus {
    pub svo: Vec<Svo>,
    pub svopn: Vec<Svopn>,
    pub svo_split: Vec<Split>,
    pub svopn_split: Vec<Split>,
}

impl TupleCorpus {
    pub fn push_svo(&mut self, t: Svo) {
        self.svo.push(t);
        self.svo_split.push(Split::Train);
    }

    pub fn push_svopn(&mut self, t: Svopn) {
        self.svopn.push(t);
        self.svopn_split.push(Split::Train);
    }

    pub fn len(&self) -> usize {
        self.svo.len() + self.svopn.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn svo_in(&self, split: Split) -> impl Iterator<Item = &Svo> + '_ {
        self.svo
            .iter()
            .zip(&self.svo_split)
            .filter(move |(_, s)| **s == split)
            .map(|(t, _)| t)
    }

    pub fn svopn_in(&self, split: Split) -> impl Iterator<Item = &Svopn> + '_ {
        self.svopn
            .iter()
            .zip(&self.svopn_split)
            .filter(move |(_, s)| **s == split)
            .map(|(t, _)| t)
    }

    /// Number of (svo, svopn) tuples assigned to `split`.
    pub fn split_sizes(&self, split: Split) -> (usize, usize) {
        (self.svo_in(split).count(), self.svopn_in(split).count())
    }
}

/// Verb-object co-occurrence counts over the training split.
///
/// Every VO occurrence counts, whether it comes from an SVO tuple or from the
/// SVO part of an SVOPN tuple.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct VoCounts {
    pub verb: Vec<u64>,
    pub object: Vec<u64>,
    pub pair: HashMap<(u32, u32), u64>,
    pub total: u64,
}

impl VoCounts {
    pub fn from_training(corpus: &TupleCorpus, n_verbs: usize, n_nouns: usize) -> Self {
        let mut counts = VoCounts {
            verb: vec![0; n_verbs],
            object: vec![0; n_nouns],
            ..Default::default()
        };
        let train_svo = corpus.svo_in(Split::Train);
        let train_inner = corpus.svopn_in(Split::Train).map(|t| &t.svo);
        for t in train_svo.chain(train_inner) {
            counts.add(t.verb, t.object, 1);
        }
        counts
    }

    pub fn add(&mut self, verb: u32, object: u32, n: u64) {
        self.verb[verb as usize] += n;
        self.object[object as usize] += n;
        *self.pair.entry((verb, object)).or_insert(0) += n;
        self.total += n;
    }

    pub fn pair_count(&self, verb: u32, object: u32) -> u64 {
        self.pair.get(&(verb, object)).copied().unwrap_or(0)
    }

    pub fn verb_count(&self, verb: u32) -> u64 {
        self.verb.get(verb as usize).copied().unwrap_or(0)
    }

    pub fn object_count(&self, object: u32) -> u64 {
        self.object.get(object as usize).copied().unwrap_or(0)
    }

    /// Pairs in ascending (verb, object) order.
    pub fn sorted_pairs(&self) -> Vec<((u32, u32), u64)> {
        let mut pairs: Vec<_> = self.pair.iter().map(|(&k, &v)| (k, v)).collect();
        pairs.sort_unstable();
        pairs
    }
}

/// Vocabularies for the three word classes plus training-split counts.
///
/// Subjects, objects and prepositional nouns share the noun vocabulary.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Lexicon {
    pub nouns: Vocab,
    pub verbs: Vocab,
    pub preps: Vocab,
    pub counts: VoCounts,
}

impl Lexicon {
    /// Recompute counts from the training split of `corpus`.
    pub fn count_training(&mut self, corpus: &TupleCorpus) {
        self.counts = VoCounts::from_training(corpus, self.verbs.len(), self.nouns.len());
    }

    pub fn noun(&self, word: &str) -> Result<u32> {
        self.nouns.id(word).ok_or_else(|| unknown("noun", word))
    }

    pub fn verb(&self, word: &str) -> Result<u32> {
        self.verbs.id(word).ok_or_else(|| unknown("verb", word))
    }

    pub fn prep(&self, word: &str) -> Result<u32> {
        self.preps
            .id(word)
            .ok_or_else(|| unknown("preposition", word))
    }

    /// "verb object" display form of a phrase.
    pub fn phrase_label(&self, verb: u32, object: u32) -> String {
        format!(
            "{} {}",
            self.verbs.word(verb).unwrap_or("?"),
            self.nouns.word(object).unwrap_or("?")
        )
    }
}

fn unknown(kind: &'static str, token: &str) -> Error {
    Error::UnknownToken {
        kind,
        token: token.to_owned(),
    }
}

/// Outcome of reading one tuple stream.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ParseStats {
    /// Non-blank lines read.
    pub lines: usize,
    pub svo: usize,
    pub svopn: usize,
    /// 1-based line numbers of malformed lines.
    pub malformed: Vec<usize>,
}

impl ParseStats {
    pub fn malformed_fraction(&self) -> f64 {
        if self.lines == 0 {
            0.0
        } else {
            self.malformed.len() as f64 / self.lines as f64
        }
    }

    /// Fails when more than [`MALFORMED_LIMIT`] of the lines were malformed.
    pub fn check(&self) -> Result<()> {
        if self.malformed_fraction() > MALFORMED_LIMIT {
            return Err(Error::TooManyMalformed {
                malformed: self.malformed.len(),
                total: self.lines,
                first_line: self.malformed[0],
                limit_pct: MALFORMED_LIMIT * 100.0,
            });
        }
        Ok(())
    }
}

/// Lexicon, corpus and ingestion statistics from [`parse_tuple_file`].
#[derive(Clone, Debug, Default)]
pub struct ParsedCorpus {
    pub lexicon: Lexicon,
    pub corpus: TupleCorpus,
    pub stats: ParseStats,
}

/// Parse a tab-separated tuple stream into a fresh lexicon and corpus.
///
/// Lines are `S\tV\tO` or `S\tV\tO\tP\tN`. Blank lines are ignored. Other
/// shapes are recorded as malformed; the call fails if they exceed
/// [`MALFORMED_LIMIT`] of the stream.
pub fn parse_tuple_file<R: BufRead>(reader: R) -> Result<ParsedCorpus> {
    let mut parsed = ParsedCorpus::default();
    parsed.stats = parse_tuples_into(&mut parsed.lexicon, &mut parsed.corpus, reader)?;
    parsed.stats.check()?;
    Ok(parsed)
}

/// Append the tuples from `reader` to an existing lexicon and corpus.
///
/// Does not apply the malformed-line limit; callers decide via
/// [`ParseStats::check`].
pub fn parse_tuples_into<R: BufRead>(
    lexicon: &mut Lexicon,
    corpus: &mut TupleCorpus,
    reader: R,
) -> Result<ParseStats> {
    let mut stats = ParseStats::default();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        stats.lines += 1;
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.iter().any(|f| f.is_empty()) {
            stats.malformed.push(idx + 1);
            continue;
        }
        match fields.as_slice() {
            [s, v, o] => {
                let t = Svo::new(
                    lexicon.nouns.intern(s),
                    lexicon.verbs.intern(v),
                    lexicon.nouns.intern(o),
                );
                corpus.push_svo(t);
                stats.svo += 1;
            }
            [s, v, o, p, n] => {
                let svo = Svo::new(
                    lexicon.nouns.intern(s),
                    lexicon.verbs.intern(v),
                    lexicon.nouns.intern(o),
                );
                let prep = lexicon.preps.intern(p);
                let noun = lexicon.nouns.intern(n);
                corpus.push_svopn(Svopn { svo, prep, noun });
                stats.svopn += 1;
            }
            _ => stats.malformed.push(idx + 1),
        }
    }
    Ok(stats)
}

/// Write the corpus back in the tab-separated tuple format: all SVO tuples,
/// then all SVOPN tuples.
pub fn write_tuples<W: Write>(corpus: &TupleCorpus, lexicon: &Lexicon, mut out: W) -> Result<()> {
    let noun = |id: u32| lexicon.nouns.word(id).unwrap_or("?");
    let verb = |id: u32| lexicon.verbs.word(id).unwrap_or("?");
    for t in &corpus.svo {
        writeln!(
            out,
            "{}\t{}\t{}",
            noun(t.subject),
            verb(t.verb),
            noun(t.object)
        )?;
    }
    for t in &corpus.svopn {
        writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}",
            noun(t.svo.subject),
            verb(t.svo.verb),
            noun(t.svo.object),
            lexicon.preps.word(t.prep).unwrap_or("?"),
            noun(t.noun)
        )?;
    }
    Ok(())
}

/// Train/dev/test proportions.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SplitRatios {
    pub train: f64,
    pub dev: f64,
    pub test: f64,
}

impl SplitRatios {
    pub fn new(train: f64, dev: f64, test: f64) -> Result<Self> {
        let r = Self { train, dev, test };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        let parts = [self.train, self.dev, self.test];
        if parts.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::Config(format!(
                "split ratios must be non-negative, got {parts:?}"
            )));
        }
        let sum: f64 = parts.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!(
                "split ratios must sum to 1, got {sum}"
            )));
        }
        Ok(())
    }

    /// Class sizes for `n` items: train and dev are rounded, test takes the rest.
    pub fn sizes(&self, n: usize) -> (usize, usize, usize) {
        let train = ((n as f64) * self.train).round().min(n as f64) as usize;
        let dev = ((n as f64) * self.dev).round().min((n - train) as f64) as usize;
        (train, dev, n - train - dev)
    }
}

impl Default for SplitRatios {
    fn default() -> Self {
        Self {
            train: 0.8,
            dev: 0.1,
            test: 0.1,
        }
    }
}

/// Assign every tuple to train/dev/test by a seeded shuffle. SVO and SVOPN
/// lists are split independently.
pub fn split_corpus(corpus: &mut TupleCorpus, ratios: SplitRatios, seed: u64) -> Result<()> {
    ratios.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    corpus.svo_split = assign_splits(corpus.svo.len(), ratios, &mut rng);
    corpus.svopn_split = assign_splits(corpus.svopn.len(), ratios, &mut rng);
    Ok(())
}

fn assign_splits(n: usize, ratios: SplitRatios, rng: &mut ChaCha8Rng) -> Vec<Split> {
    let (train, dev, _) = ratios.sizes(n);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut splits = vec![Split::Test; n];
    for (rank, &i) in order.iter().enumerate() {
        splits[i] = if rank < train {
            Split::Train
        } else if rank < train + dev {
            Split::Dev
        } else {
            Split::Test
        };
    }
    splits
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn parse(text: &str) -> Result<ParsedCorpus> {
        parse_tuple_file(text.as_bytes())
    }

    #[test]
    fn parses_svo_line() {
        let p = parse("importer\tmake\tpayment\n").unwrap();
        assert_eq!(p.corpus.svo, vec![Svo::new(0, 0, 1)]);
        assert_eq!(p.lexicon.nouns.words(), ["importer", "payment"]);
        assert_eq!(p.lexicon.verbs.words(), ["make"]);
        assert!(p.stats.malformed.is_empty());
    }

    #[test]
    fn parses_svopn_line() {
        let p = parse("importer\tmake\tpayment\tin\tcurrency\n").unwrap();
        assert!(p.corpus.svo.is_empty());
        assert_eq!(p.corpus.svopn.len(), 1);
        let t = p.corpus.svopn[0];
        assert_eq!(t.svo, Svo::new(0, 0, 1));
        assert_eq!(p.lexicon.preps.word(t.prep), Some("in"));
        assert_eq!(p.lexicon.nouns.word(t.noun), Some("currency"));
    }

    #[test]
    fn empty_stream() {
        let p = parse("").unwrap();
        assert!(p.corpus.is_empty());
        assert_eq!(p.stats.lines, 0);
        assert!(p.stats.malformed.is_empty());
    }

    #[test]
    fn malformed_lines_are_counted() {
        let mut text = String::new();
        for i in 0..199 {
            text.push_str(&format!("s{i}\tv\to\n"));
        }
        text.push_str("just\ttwo\n");
        let p = parse(&text).unwrap();
        assert_eq!(p.stats.malformed, vec![200]);
        assert_eq!(p.corpus.svo.len(), 199);

        for bad in ["a", "a\tb", "a\tb\tc\td", "a\tb\tc\td\te\tf", "a\t\tc"] {
            let err = parse(&format!("x\ty\tz\n{bad}\n")).unwrap_err();
            assert!(
                matches!(
                    err,
                    Error::TooManyMalformed {
                        malformed: 1,
                        total: 2,
                        first_line: 2,
                        ..
                    }
                ),
                "{bad:?}"
            );
        }
    }

    #[test]
    fn counts_include_svopn_inner_pairs() {
        let p = parse("a\tmake\tb\na\tmake\tb\tin\tc\nd\teat\tb\n").unwrap();
        let mut lex = p.lexicon;
        lex.count_training(&p.corpus);
        let make = lex.verbs.id("make").unwrap();
        let b = lex.nouns.id("b").unwrap();
        assert_eq!(lex.counts.pair_count(make, b), 2);
        assert_eq!(lex.counts.object_count(b), 3);
        assert_eq!(lex.counts.total, 3);
        let sum: u64 = lex.counts.pair.values().sum();
        assert_eq!(sum, lex.counts.total);
    }

    fn corpus_of(n: usize) -> TupleCorpus {
        let mut c = TupleCorpus::default();
        for i in 0..n {
            c.push_svo(Svo::new(i as u32, 0, 0));
        }
        c
    }

    #[test]
    fn split_ten_tuples() {
        let mut c = corpus_of(10);
        split_corpus(&mut c, SplitRatios::default(), 7).unwrap();
        assert_eq!(c.split_sizes(Split::Train).0, 8);
        assert_eq!(c.split_sizes(Split::Dev).0, 1);
        assert_eq!(c.split_sizes(Split::Test).0, 1);
    }

    #[test]
    fn split_all_train() {
        let mut c = corpus_of(13);
        split_corpus(&mut c, SplitRatios::new(1.0, 0.0, 0.0).unwrap(), 1).unwrap();
        assert!(c.svo_split.iter().all(|s| *s == Split::Train));
    }

    #[test]
    fn split_is_deterministic() {
        let mut a = corpus_of(100);
        let mut b = corpus_of(100);
        split_corpus(&mut a, SplitRatios::default(), 42).unwrap();
        split_corpus(&mut b, SplitRatios::default(), 42).unwrap();
        assert_eq!(a.svo_split, b.svo_split);
        let mut c = corpus_of(100);
        split_corpus(&mut c, SplitRatios::default(), 43).unwrap();
        assert_ne!(a.svo_split, c.svo_split);
    }

    #[test]
    fn split_rejects_bad_ratios() {
        let mut c = corpus_of(5);
        let bad = SplitRatios {
            train: 0.8,
            dev: 0.1,
            test: 0.2,
        };
        assert!(matches!(
            split_corpus(&mut c, bad, 0),
            Err(Error::Config(_))
        ));
        assert!(SplitRatios::new(1.1, -0.1, 0.0).is_err());
    }

    fn token() -> impl Strategy<Value = String> {
        "[a-z]{1,3}"
    }

    fn line() -> impl Strategy<Value = Vec<String>> {
        prop_oneof![
            prop::collection::vec(token(), 3),
            prop::collection::vec(token(), 5),
        ]
    }

    proptest! {
        #[test]
        fn split_sizes_match_ratios(n in 0usize..500, a in 0.0f64..1.0, b in 0.0f64..1.0) {
            let (train_r, rest) = (a, 1.0 - a);
            let ratios = SplitRatios { train: train_r, dev: rest * b, test: 1.0 - train_r - rest * b };
            let (tr, dv, te) = ratios.sizes(n);
            prop_assert_eq!(tr + dv + te, n);
            prop_assert!((tr as f64 - n as f64 * ratios.train).abs() <= 1.0);
            prop_assert!((dv as f64 - n as f64 * ratios.dev).abs() <= 1.0);
            prop_assert!((te as f64 - n as f64 * ratios.test).abs() <= 1.0 + 1e-9);
        }

        #[test]
        fn parse_write_parse_round_trips(lines in prop::collection::vec(line(), 0..40)) {
            // write_tuples emits SVO lines first, so compare the second and third passes.
            let text: String = lines.iter().map(|l| l.join("\t") + "\n").collect();
            let first = parse(&text).unwrap();
            let mut buf = Vec::new();
            write_tuples(&first.corpus, &first.lexicon, &mut buf).unwrap();
            let second = parse_tuple_file(buf.as_slice()).unwrap();
            let mut buf2 = Vec::new();
            write_tuples(&second.corpus, &second.lexicon, &mut buf2).unwrap();
            let third = parse_tuple_file(buf2.as_slice()).unwrap();
            prop_assert_eq!(&buf, &buf2);
            prop_assert_eq!(&second.corpus, &third.corpus);
            prop_assert_eq!(&second.lexicon, &third.lexicon);
            prop_assert_eq!(first.corpus.len(), second.corpus.len());
        }
    }
}
