//! Learnable parameters and every forward computation over them.

mod io;
pub mod math;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::corpus::{build_feature_table, CandidateSet, Lexicon, PhraseFeatureTable, SparseVector};
use crate::error::{Error, Result};

pub use io::{
    decode, encode, export_text, load_model, save_model, write_atomic, FORMAT_VERSION, MAGIC,
};
pub use math::{cosine, sigmoid};

/// Default embedding dimensionality.
pub const DEFAULT_DIM: usize = 25;

/// Rows of equal width stored contiguously.
#[derive(Clone, Debug, PartialEq)]
pub struct ParamBlock {
    width: usize,
    data: Vec<f64>,
}

impl ParamBlock {
    pub fn zeros(rows: usize, width: usize) -> Self {
        Self {
            width,
            data: vec![0.0; rows * width],
        }
    }

    pub fn from_data(width: usize, data: Vec<f64>) -> Self {
        assert!(
            width > 0 && data.len().is_multiple_of(width),
            "ragged parameter block"
        );
        Self { width, data }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn rows(&self) -> usize {
        self.data.len() / self.width
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.width..(i + 1) * self.width]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.width..(i + 1) * self.width]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// First row containing a NaN or infinity.
    pub fn first_non_finite_row(&self) -> Option<usize> {
        self.data
            .iter()
            .position(|x| !x.is_finite())
            .map(|i| i / self.width)
    }
}

/// All trainable parameters.
///
/// Predicate matrices for verbs occupy ids `[0, n_verbs)`; prepositions
/// follow at `n_verbs + prep_id`.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelParams {
    pub dim: usize,
    pub n_verbs: usize,
    pub nouns: ParamBlock,
    pub predicates: ParamBlock,
    pub phrases: ParamBlock,
    pub weights: Vec<f64>,
    pub seed: u64,
}

impl ModelParams {
    pub fn verb_matrix(&self, verb: u32) -> &[f64] {
        self.predicates.row(verb as usize)
    }

    pub fn prep_matrix(&self, prep: u32) -> &[f64] {
        self.predicates.row(self.n_verbs + prep as usize)
    }

    pub fn noun(&self, id: u32) -> &[f64] {
        self.nouns.row(id as usize)
    }

    /// Name of the first block holding a non-finite value, with its row.
    pub fn first_non_finite(&self) -> Option<(&'static str, usize)> {
        if let Some(r) = self.nouns.first_non_finite_row() {
            return Some(("noun_embeddings", r));
        }
        if let Some(r) = self.predicates.first_non_finite_row() {
            return Some(("predicate_matrices", r));
        }
        if let Some(r) = self.phrases.first_non_finite_row() {
            return Some(("phrase_embeddings", r));
        }
        self.weights
            .iter()
            .position(|w| !w.is_finite())
            .map(|i| ("scorer_weights", i))
    }
}

/// Gaussian initialization: embeddings with variance `1/d`, matrices with
/// variance `1/d^2`, scorer weights zero. Draw order is nouns, predicate
/// matrices, then phrase embeddings, so the shared blocks do not depend on
/// the number of candidates.
pub fn init_params(
    lexicon: &Lexicon,
    candidates: &CandidateSet,
    n_features: usize,
    dim: usize,
    seed: u64,
) -> ModelParams {
    assert!(dim >= 1, "embedding dimensionality must be positive");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = dim as f64;
    let vec_dist = Normal::new(0.0, (1.0 / d).sqrt()).expect("valid normal");
    let mat_dist = Normal::new(0.0, 1.0 / d).expect("valid normal");
    let n_pred = lexicon.verbs.len() + lexicon.preps.len();

    let mut draw = |n: usize, dist: &Normal<f64>| -> Vec<f64> {
        (0..n).map(|_| dist.sample(&mut rng)).collect()
    };
    let nouns = ParamBlock::from_data(dim, draw(lexicon.nouns.len() * dim, &vec_dist));
    let predicates = ParamBlock::from_data(dim * dim, draw(n_pred * dim * dim, &mat_dist));
    let phrases = ParamBlock::from_data(dim, draw(candidates.len() * dim, &vec_dist));

    ModelParams {
        dim,
        n_verbs: lexicon.verbs.len(),
        nouns,
        predicates,
        phrases,
        weights: vec![0.0; n_features],
        seed,
    }
}

/// How the blending weight of a candidate phrase is obtained.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub enum AlphaMode {
    /// `sigmoid(W . phi)`, trained jointly.
    #[default]
    Learned,
    /// Constant weight; `W` is never used or updated.
    Fixed(f64),
}

/// `M(V) v(O)`.
pub fn compose_vo(verb_matrix: &[f64], object: &[f64]) -> Vec<f64> {
    math::matvec(verb_matrix, object)
}

/// `sigmoid(W . phi)`.
pub fn score_alpha(phi: &[(u32, f64)], weights: &[f64]) -> f64 {
    let z: f64 = phi.iter().map(|&(i, x)| weights[i as usize] * x).sum();
    sigmoid(z)
}

/// `alpha c + (1 - alpha) n`; returns `c` or `n` exactly at the endpoints.
pub fn blend(alpha: f64, c: &[f64], n: &[f64]) -> Vec<f64> {
    assert_eq!(c.len(), n.len(), "blend: dimension mismatch");
    if alpha == 1.0 {
        return c.to_vec();
    }
    if alpha == 0.0 {
        return n.to_vec();
    }
    c.iter()
        .zip(n)
        .map(|(&ci, &ni)| alpha * ci + (1.0 - alpha) * ni)
        .collect()
}

/// `v(S) ⊙ v(VO)`.
pub fn svo_embedding(subject: &[f64], vo: &[f64]) -> Vec<f64> {
    math::hadamard(subject, vo)
}

/// `v(S) . v(VO)`.
pub fn score_svo(subject: &[f64], vo: &[f64]) -> f64 {
    math::dot(subject, vo)
}

/// `v(SVO) . (M(P) v(N))`.
pub fn score_svopn(svo: &[f64], prep_matrix: &[f64], noun: &[f64]) -> f64 {
    math::dot(svo, &math::matvec(prep_matrix, noun))
}

/// Forward values for one verb-object phrase.
#[derive(Clone, Debug, PartialEq)]
pub struct PhraseVectors {
    /// Candidate phrase id, if the pair is a candidate.
    pub phrase: Option<u32>,
    /// Compositionality score. For non-candidates this is reported from the
    /// partial features but does not enter `v`.
    pub alpha: f64,
    pub c: Vec<f64>,
    pub n: Option<Vec<f64>>,
    pub v: Vec<f64>,
}

/// Parameters together with the vocabulary and feature tables they were
/// built from.
#[derive(Clone, Debug, PartialEq)]
pub struct Model {
    pub params: ModelParams,
    pub lexicon: Lexicon,
    pub candidates: CandidateSet,
    pub features: PhraseFeatureTable,
    pub alpha_mode: AlphaMode,
}

impl Model {
    /// Build features and freshly initialized parameters.
    pub fn new(
        lexicon: Lexicon,
        candidates: CandidateSet,
        dim: usize,
        seed: u64,
        alpha_mode: AlphaMode,
    ) -> Self {
        let features = build_feature_table(&lexicon, &candidates);
        let params = init_params(&lexicon, &candidates, features.dim(), dim, seed);
        Self {
            params,
            lexicon,
            candidates,
            features,
            alpha_mode,
        }
    }

    pub fn dim(&self) -> usize {
        self.params.dim
    }

    /// Feature vector for any pair; unknown words contribute nothing.
    pub fn phrase_features(&self, verb: Option<u32>, object: Option<u32>) -> SparseVector {
        if let (Some(v), Some(o)) = (verb, object) {
            if let Some(p) = self.candidates.id(v, o) {
                return self.features.row(p).to_vec();
            }
        }
        self.features
            .featurize(verb, object, &self.lexicon.counts, &self.candidates)
    }

    /// Compositionality score for a candidate phrase id.
    pub fn candidate_alpha(&self, phrase: u32) -> f64 {
        match self.alpha_mode {
            AlphaMode::Learned => score_alpha(self.features.row(phrase), &self.params.weights),
            AlphaMode::Fixed(a) => a,
        }
    }

    /// Compositionality score for any pair, from whatever features fire.
    pub fn alpha(&self, verb: Option<u32>, object: Option<u32>) -> f64 {
        match self.alpha_mode {
            AlphaMode::Learned => {
                score_alpha(&self.phrase_features(verb, object), &self.params.weights)
            }
            AlphaMode::Fixed(a) => a,
        }
    }

    /// Compositionality score for a "verb object" given as words.
    pub fn alpha_for_words(&self, verb: &str, object: &str) -> f64 {
        self.alpha(self.lexicon.verbs.id(verb), self.lexicon.nouns.id(object))
    }

    fn check_verb(&self, verb: u32) -> Result<()> {
        check_id("verb", verb, self.lexicon.verbs.len())
    }

    fn check_noun(&self, noun: u32) -> Result<()> {
        check_id("noun", noun, self.lexicon.nouns.len())
    }

    /// `v(VO)`: blended for candidates, purely compositional otherwise.
    pub fn vo_embedding(&self, verb: u32, object: u32) -> Result<PhraseVectors> {
        self.check_verb(verb)?;
        self.check_noun(object)?;
        let c = compose_vo(self.params.verb_matrix(verb), self.params.noun(object));
        match self.candidates.id(verb, object) {
            Some(p) => {
                let alpha = self.candidate_alpha(p);
                let n = self.params.phrases.row(p as usize).to_vec();
                let v = blend(alpha, &c, &n);
                Ok(PhraseVectors {
                    phrase: Some(p),
                    alpha,
                    c,
                    n: Some(n),
                    v,
                })
            }
            None => Ok(PhraseVectors {
                phrase: None,
                alpha: self.alpha(Some(verb), Some(object)),
                v: c.clone(),
                c,
                n: None,
            }),
        }
    }

    /// `v(SVO) = v(S) ⊙ v(VO)`.
    pub fn svo_vector(&self, subject: u32, verb: u32, object: u32) -> Result<Vec<f64>> {
        self.check_noun(subject)?;
        let vo = self.vo_embedding(verb, object)?;
        Ok(svo_embedding(self.params.noun(subject), &vo.v))
    }

    pub fn svo_score(&self, subject: u32, verb: u32, object: u32) -> Result<f64> {
        self.check_noun(subject)?;
        let vo = self.vo_embedding(verb, object)?;
        Ok(score_svo(self.params.noun(subject), &vo.v))
    }

    pub fn svopn_score(&self, svo: (u32, u32, u32), prep: u32, noun: u32) -> Result<f64> {
        check_id("preposition", prep, self.lexicon.preps.len())?;
        self.check_noun(noun)?;
        let v_svo = self.svo_vector(svo.0, svo.1, svo.2)?;
        Ok(score_svopn(
            &v_svo,
            self.params.prep_matrix(prep),
            self.params.noun(noun),
        ))
    }

    /// Mean compositionality score over candidates; 1.0 when there are none,
    /// since every phrase is then purely compositional.
    pub fn mean_candidate_alpha(&self) -> f64 {
        let n = self.candidates.len();
        if n == 0 {
            return 1.0;
        }
        (0..n as u32).map(|p| self.candidate_alpha(p)).sum::<f64>() / n as f64
    }
}

fn check_id(kind: &'static str, id: u32, size: usize) -> Result<()> {
    if (id as usize) < size {
        Ok(())
    } else {
        Err(Error::UnknownId { kind, id, size })
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::corpus::{parse_tuple_file, select_candidates};
    use proptest::prelude::*;

    pub(crate) fn toy_model(k: u64) -> Model {
        let text = "a\tbuy\tcar\na\tbuy\tcar\nb\tbuy\tcar\nb\tsell\tcar\nc\tsell\thouse\n\
                    a\tbuy\thouse\tin\tcity\nb\tsell\tcar\tto\tc\n";
        let parsed = parse_tuple_file(text.as_bytes()).unwrap();
        let mut lex = parsed.lexicon;
        lex.count_training(&parsed.corpus);
        let cands = select_candidates(&lex.counts, k);
        Model::new(lex, cands, 4, 11, AlphaMode::Learned)
    }

    #[test]
    fn alpha_is_half_after_init() {
        let m = toy_model(0);
        assert!(!m.candidates.is_empty());
        for p in 0..m.candidates.len() as u32 {
            assert_eq!(m.candidate_alpha(p), 0.5);
        }
        assert_eq!(m.alpha(None, None), 0.5);
    }

    #[test]
    fn init_is_deterministic() {
        let a = toy_model(0);
        let b = toy_model(0);
        assert_eq!(a.params, b.params);
        let bits = |m: &Model| {
            m.params
                .nouns
                .data()
                .iter()
                .map(|x| x.to_bits())
                .collect::<Vec<_>>()
        };
        assert_eq!(bits(&a), bits(&b));
    }

    #[test]
    fn shared_blocks_independent_of_candidates() {
        let with = toy_model(0);
        let without = toy_model(100);
        assert!(without.candidates.is_empty());
        assert_eq!(with.params.nouns, without.params.nouns);
        assert_eq!(with.params.predicates, without.params.predicates);
    }

    #[test]
    fn init_variance() {
        // Statistical check of the embedding and matrix variances.
        let dim = 8;
        let mut lex = Lexicon::default();
        for i in 0..20_000 {
            lex.nouns.intern(&format!("n{i}"));
        }
        for i in 0..2_000 {
            lex.verbs.intern(&format!("v{i}"));
        }
        let p = init_params(&lex, &CandidateSet::empty(), 0, dim, 5);
        let var = |xs: &[f64]| {
            let n = xs.len() as f64;
            let mean = xs.iter().sum::<f64>() / n;
            xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
        };
        let d = dim as f64;
        assert!(p.nouns.data().len() >= 100_000);
        assert!((var(p.nouns.data()) * d - 1.0).abs() < 0.05);
        assert!((var(p.predicates.data()) * d * d - 1.0).abs() < 0.05);
    }

    #[test]
    fn compose_examples() {
        let v = [0.3, -1.2];
        assert_eq!(compose_vo(&[1.0, 0.0, 0.0, 1.0], &v), v.to_vec());
        assert_eq!(compose_vo(&[0.0; 4], &v), vec![0.0, 0.0]);
        assert_eq!(
            compose_vo(&[1.0, 2.0, 3.0, 4.0], &[1.0, 1.0]),
            vec![3.0, 7.0]
        );
    }

    #[test]
    #[should_panic(expected = "shape mismatch")]
    fn compose_shape_mismatch() {
        compose_vo(&[1.0, 2.0, 3.0], &[1.0, 1.0]);
    }

    #[test]
    fn score_alpha_examples() {
        assert_eq!(score_alpha(&[(0, 1.0), (3, 0.4)], &[0.0; 5]), 0.5);
        assert_eq!(score_alpha(&[], &[1.0; 5]), 0.5);
        let w = [3f64.ln(), 0.0];
        assert!((score_alpha(&[(0, 1.0)], &w) - 0.75).abs() < 1e-12);
    }

    #[test]
    fn blend_examples() {
        let c = [2.0, 0.0];
        let n = [0.0, 2.0];
        assert_eq!(blend(1.0, &c, &n), c.to_vec());
        assert_eq!(blend(0.0, &c, &n), n.to_vec());
        assert_eq!(blend(0.5, &c, &n), vec![1.0, 1.0]);
    }

    #[test]
    fn svo_and_scores() {
        assert_eq!(svo_embedding(&[1.0, 1.0], &[3.0, 4.0]), vec![3.0, 4.0]);
        assert_eq!(svo_embedding(&[0.0, 0.0], &[3.0, 4.0]), vec![0.0, 0.0]);
        assert_eq!(svo_embedding(&[1.0, 2.0], &[3.0, 4.0]), vec![3.0, 8.0]);
        assert_eq!(score_svo(&[1.0, 0.0], &[0.0, 1.0]), 0.0);
        assert_eq!(score_svo(&[0.6, 0.8], &[0.6, 0.8]), 1.0);
        assert_eq!(score_svo(&[1.0, 2.0], &[3.0, 4.0]), 11.0);
        assert_eq!(score_svopn(&[1.0, 2.0], &[0.0; 4], &[5.0, 7.0]), 0.0);
        assert_eq!(
            score_svopn(&[1.0, 0.0], &[0.0, 1.0, 1.0, 0.0], &[5.0, 7.0]),
            7.0
        );
    }

    #[test]
    fn non_candidate_uses_composition_exactly() {
        let m = toy_model(1);
        let sell = m.lexicon.verbs.id("sell").unwrap();
        let house = m.lexicon.nouns.id("house").unwrap();
        assert!(m.candidates.id(sell, house).is_none());
        let pv = m.vo_embedding(sell, house).unwrap();
        let c = compose_vo(m.params.verb_matrix(sell), m.params.noun(house));
        assert!(pv.n.is_none());
        assert_eq!(
            pv.v.iter().map(|x| x.to_bits()).collect::<Vec<_>>(),
            c.iter().map(|x| x.to_bits()).collect::<Vec<_>>()
        );
        assert_eq!(pv.alpha, 0.5);
    }

    #[test]
    fn candidate_with_equal_parts() {
        let mut m = toy_model(0);
        let buy = m.lexicon.verbs.id("buy").unwrap();
        let car = m.lexicon.nouns.id("car").unwrap();
        let p = m.candidates.id(buy, car).unwrap();
        let c = compose_vo(m.params.verb_matrix(buy), m.params.noun(car));
        m.params.phrases.row_mut(p as usize).copy_from_slice(&c);
        let w = m.features.layout.phrase_index(p) as usize;
        m.params.weights[w] = 1.3;
        let pv = m.vo_embedding(buy, car).unwrap();
        assert!(pv.alpha > 0.5);
        for (a, b) in pv.v.iter().zip(&c) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn unknown_ids_are_lookup_errors() {
        let m = toy_model(0);
        assert!(matches!(
            m.vo_embedding(99, 0),
            Err(Error::UnknownId { kind: "verb", .. })
        ));
        assert!(matches!(
            m.vo_embedding(0, 99),
            Err(Error::UnknownId { kind: "noun", .. })
        ));
    }

    #[test]
    fn phrase_indicator_only_moves_its_own_alpha() {
        let mut m = toy_model(0);
        let before: Vec<f64> = (0..m.candidates.len() as u32)
            .map(|p| m.candidate_alpha(p))
            .collect();
        let target = 1u32;
        let w = m.features.layout.phrase_index(target) as usize;
        m.params.weights[w] += 0.7;
        for (p, &b) in before.iter().enumerate() {
            let a = m.candidate_alpha(p as u32);
            if p as u32 == target {
                assert!(a > b);
            } else {
                assert_eq!(a, b);
            }
        }
    }

    fn vec_strategy(d: usize) -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(-3.0f64..3.0, d)
    }

    proptest! {
        #[test]
        fn blend_lies_on_segment(alpha in 0.0f64..=1.0, c in vec_strategy(5), n in vec_strategy(5)) {
            let v = blend(alpha, &c, &n);
            for i in 0..5 {
                prop_assert!(((v[i] - n[i]) - alpha * (c[i] - n[i])).abs() < 1e-14);
            }
        }

        #[test]
        fn identity_prep_matrix_reduces_to_svo(a in vec_strategy(3), b in vec_strategy(3)) {
            let eye = [1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0];
            prop_assert!((score_svopn(&a, &eye, &b) - score_svo(&a, &b)).abs() < 1e-14);
        }

        #[test]
        fn svo_score_is_linear_in_subject(a in vec_strategy(4), b in vec_strategy(4), t in -5.0f64..5.0) {
            let scaled: Vec<f64> = a.iter().map(|x| x * t).collect();
            prop_assert!((score_svo(&scaled, &b) - t * score_svo(&a, &b)).abs() < 1e-12);
        }

        #[test]
        fn score_alpha_monotone(w in -10.0f64..10.0, dw in 1e-3f64..5.0) {
            let phi = [(0u32, 1.0)];
            prop_assert!(score_alpha(&phi, &[w + dw]) > score_alpha(&phi, &[w]));
        }
    }
}
