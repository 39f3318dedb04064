use super::{CandidateSet, Lexicon, VoCounts};

/// Sparse feature vector as `(index, value)` pairs in ascending index order.
pub type SparseVector = Vec<(u32, f64)>;

/// Index layout of the compositionality feature vector:
/// `[verb one-hot | object one-hot | phrase one-hot | freq | pmi]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FeatureLayout {
    pub n_verbs: usize,
    pub n_nouns: usize,
    pub n_candidates: usize,
}

impl FeatureLayout {
    pub fn verb_index(&self, verb: u32) -> u32 {
        verb
    }

    pub fn object_index(&self, object: u32) -> u32 {
        (self.n_verbs as u32) + object
    }

    pub fn phrase_index(&self, phrase: u32) -> u32 {
        (self.n_verbs + self.n_nouns) as u32 + phrase
    }

    pub fn freq_index(&self) -> u32 {
        (self.n_verbs + self.n_nouns + self.n_candidates) as u32
    }

    pub fn pmi_index(&self) -> u32 {
        self.freq_index() + 1
    }

    /// Total feature count `N`.
    pub fn dim(&self) -> usize {
        self.n_verbs + self.n_nouns + self.n_candidates + 2
    }
}

/// `ln count(VO)`; `None` when the pair was never seen.
pub fn freq_feature(count_vo: u64) -> Option<f64> {
    (count_vo >= 1).then(|| (count_vo as f64).ln())
}

/// `ln(count(VO) count(*) / (count(V) count(O)))`; `None` if any count is zero.
pub fn pmi_feature(count_vo: u64, count_v: u64, count_o: u64, count_star: u64) -> Option<f64> {
    if count_vo == 0 || count_v == 0 || count_o == 0 || count_star == 0 {
        return None;
    }
    let num = count_vo as f64 * count_star as f64;
    let den = count_v as f64 * count_o as f64;
    Some((num / den).ln())
}

/// Feature vectors for every candidate phrase plus the frozen normalization
/// constants used to featurize any other pair.
#[derive(Clone, Debug, PartialEq)]
pub struct PhraseFeatureTable {
    pub layout: FeatureLayout,
    pub norm_freq: f64,
    pub norm_pmi: f64,
    rows: Vec<SparseVector>,
}

impl PhraseFeatureTable {
    /// Rebuild the candidate rows with previously frozen norms.
    pub fn with_norms(
        lexicon: &Lexicon,
        candidates: &CandidateSet,
        norm_freq: f64,
        norm_pmi: f64,
    ) -> Self {
        let mut table = Self {
            layout: FeatureLayout {
                n_verbs: lexicon.verbs.len(),
                n_nouns: lexicon.nouns.len(),
                n_candidates: candidates.len(),
            },
            norm_freq,
            norm_pmi,
            rows: Vec::new(),
        };
        table.rows = candidates
            .phrases()
            .iter()
            .map(|&(v, o)| table.featurize(Some(v), Some(o), &lexicon.counts, candidates))
            .collect();
        table
    }

    pub fn dim(&self) -> usize {
        self.layout.dim()
    }

    pub fn row(&self, phrase: u32) -> &[(u32, f64)] {
        &self.rows[phrase as usize]
    }

    pub fn rows(&self) -> &[SparseVector] {
        &self.rows
    }

    /// Features for an arbitrary pair. Unknown words (`None`) and non-candidate
    /// pairs simply contribute fewer features; freq and PMI fire only when the
    /// pair was seen in training.
    pub fn featurize(
        &self,
        verb: Option<u32>,
        object: Option<u32>,
        counts: &VoCounts,
        candidates: &CandidateSet,
    ) -> SparseVector {
        let layout = &self.layout;
        let mut phi = SparseVector::with_capacity(5);
        if let Some(v) = verb.filter(|&v| (v as usize) < layout.n_verbs) {
            phi.push((layout.verb_index(v), 1.0));
        }
        if let Some(o) = object.filter(|&o| (o as usize) < layout.n_nouns) {
            phi.push((layout.object_index(o), 1.0));
        }
        let (Some(v), Some(o)) = (verb, object) else {
            return phi;
        };
        if let Some(p) = candidates.id(v, o) {
            phi.push((layout.phrase_index(p), 1.0));
        }
        let count_vo = counts.pair_count(v, o);
        if let Some(f) = freq_feature(count_vo) {
            if f != 0.0 {
                phi.push((layout.freq_index(), f / self.norm_freq));
            }
        }
        let pmi = pmi_feature(
            count_vo,
            counts.verb_count(v),
            counts.object_count(o),
            counts.total,
        );
        if let Some(p) = pmi {
            if p != 0.0 {
                phi.push((layout.pmi_index(), p / self.norm_pmi));
            }
        }
        phi
    }
}

/// Build candidate feature vectors, normalizing freq and PMI so that their
/// maximum absolute value over the candidates is 1.
pub fn build_feature_table(lexicon: &Lexicon, candidates: &CandidateSet) -> PhraseFeatureTable {
    let counts = &lexicon.counts;
    let mut max_freq = 0.0f64;
    let mut max_pmi = 0.0f64;
    for &(v, o) in candidates.phrases() {
        let c = counts.pair_count(v, o);
        if let Some(f) = freq_feature(c) {
            max_freq = max_freq.max(f.abs());
        }
        let pmi = pmi_feature(
            c,
            counts.verb_count(v),
            counts.object_count(o),
            counts.total,
        );
        if let Some(p) = pmi {
            max_pmi = max_pmi.max(p.abs());
        }
    }
    // A zero maximum means the feature never fires with a nonzero value.
    let norm = |m: f64| if m > 0.0 { m } else { 1.0 };
    PhraseFeatureTable::with_norms(lexicon, candidates, norm(max_freq), norm(max_pmi))
}
