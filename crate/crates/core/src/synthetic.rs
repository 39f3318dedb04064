//! Generated SVO corpora with known compositional structure.
//!
//! Every noun and verb gets a random latent vector or matrix. The subjects of
//! a regular pair `(v, o)` are the `k` subjects scoring highest under the
//! latent bilinear form `u(s) . A(v) x(o)`, so they are predicted by the
//! components. An idiomatic pair takes the `k` lowest-scoring subjects
//! instead, a set disjoint from the one its components predict.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticSpec {
    pub seed: u64,
    pub verbs: usize,
    pub objects: usize,
    pub subjects: usize,
    pub latent_dim: usize,
    /// Distinct subjects observed with each pair.
    pub subjects_per_pair: usize,
    /// Number of high-frequency regular pairs.
    pub frequent_regular: usize,
    pub idioms: usize,
    pub frequent_count: usize,
    pub rare_count: usize,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            seed: 7,
            verbs: 10,
            objects: 30,
            subjects: 40,
            latent_dim: 5,
            subjects_per_pair: 5,
            frequent_regular: 20,
            idioms: 2,
            frequent_count: 400,
            rare_count: 160,
        }
    }
}

impl SyntheticSpec {
    /// About a thousand tuples; for smoke tests.
    pub fn tiny() -> Self {
        Self {
            seed: 3,
            verbs: 4,
            objects: 8,
            subjects: 10,
            latent_dim: 4,
            subjects_per_pair: 3,
            frequent_regular: 5,
            idioms: 1,
            frequent_count: 80,
            rare_count: 20,
        }
    }

    /// A count threshold separating frequent from rare pairs.
    pub fn threshold(&self) -> u64 {
        ((self.frequent_count + self.rare_count) / 2) as u64
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticCorpus {
    pub tuples: Vec<[String; 3]>,
    /// `(verb, object)` of the idiomatic pairs.
    pub idioms: Vec<(String, String)>,
    /// For each idiom, the subjects its components predict.
    pub idiom_predicted_subjects: Vec<Vec<String>>,
    pub frequent_regular: Vec<(String, String)>,
}

impl SyntheticCorpus {
    /// Tab-separated `subject verb object` lines.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for [s, v, o] in &self.tuples {
            out.push_str(s);
            out.push('\t');
            out.push_str(v);
            out.push('\t');
            out.push_str(o);
            out.push('\n');
        }
        out
    }
}

fn verb(v: usize) -> String {
    format!("verb{v}")
}

fn object(o: usize) -> String {
    format!("obj{o}")
}

fn subject(s: usize) -> String {
    format!("subj{s}")
}

fn gaussian(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

/// Subjects ordered from highest to lowest latent score for `(v, o)`.
fn ranked_subjects(subj: &[Vec<f64>], verb_mat: &[f64], obj: &[f64]) -> Vec<usize> {
    let r = obj.len();
    let target: Vec<f64> = verb_mat
        .chunks_exact(r)
        .map(|row| row.iter().zip(obj).map(|(a, b)| a * b).sum())
        .collect();
    let score = |s: &Vec<f64>| -> f64 { s.iter().zip(&target).map(|(a, b)| a * b).sum() };
    let mut order: Vec<usize> = (0..subj.len()).collect();
    order.sort_by(|&a, &b| score(&subj[b]).total_cmp(&score(&subj[a])).then(a.cmp(&b)));
    order
}

pub fn generate(spec: &SyntheticSpec) -> SyntheticCorpus {
    let k = spec.subjects_per_pair;
    assert!(
        2 * k <= spec.subjects,
        "idiom subjects must not overlap the predicted ones"
    );
    let n_pairs = spec.verbs * spec.objects;
    assert!(
        spec.idioms + spec.frequent_regular <= n_pairs,
        "not enough pairs"
    );
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let r = spec.latent_dim;
    let subj: Vec<Vec<f64>> = (0..spec.subjects).map(|_| gaussian(&mut rng, r)).collect();
    let obj: Vec<Vec<f64>> = (0..spec.objects).map(|_| gaussian(&mut rng, r)).collect();
    let verbs: Vec<Vec<f64>> = (0..spec.verbs).map(|_| gaussian(&mut rng, r * r)).collect();

    // Idioms use distinct verbs and objects; the remaining frequent pairs
    // are drawn uniformly from the rest.
    let mut pairs: Vec<(usize, usize)> = (0..n_pairs)
        .map(|p| (p / spec.objects, p % spec.objects))
        .collect();
    pairs.shuffle(&mut rng);
    let mut idioms: Vec<(usize, usize)> = Vec::new();
    let mut rest = Vec::new();
    for p in pairs {
        if idioms.len() < spec.idioms && idioms.iter().all(|q| q.0 != p.0 && q.1 != p.1) {
            idioms.push(p);
        } else {
            rest.push(p);
        }
    }
    assert_eq!(
        idioms.len(),
        spec.idioms,
        "idioms need distinct verbs and objects"
    );
    let frequent: Vec<(usize, usize)> = rest[..spec.frequent_regular].to_vec();

    let mut tuples = Vec::new();
    let mut predicted = Vec::new();
    let mut all: Vec<(usize, usize)> = idioms.iter().chain(&rest).copied().collect();
    all.sort_unstable();
    for (v, o) in all {
        let ranked = ranked_subjects(&subj, &verbs[v], &obj[o]);
        let is_idiom = idioms.contains(&(v, o));
        let pool = if is_idiom {
            predicted.push(((v, o), ranked[..k].to_vec()));
            &ranked[ranked.len() - k..]
        } else {
            &ranked[..k]
        };
        let count = if is_idiom || frequent.contains(&(v, o)) {
            spec.frequent_count
        } else {
            spec.rare_count
        };
        for _ in 0..count {
            let s = pool[rng.random_range(0..k)];
            tuples.push([subject(s), verb(v), object(o)]);
        }
    }
    tuples.shuffle(&mut rng);

    let label = |&(v, o): &(usize, usize)| (verb(v), object(o));
    SyntheticCorpus {
        tuples,
        idioms: idioms.iter().map(label).collect(),
        idiom_predicted_subjects: idioms
            .iter()
            .map(|p| {
                let (_, subs) = predicted.iter().find(|(q, _)| q == p).expect("recorded");
                subs.iter().map(|&s| subject(s)).collect()
            })
            .collect(),
        frequent_regular: frequent.iter().map(label).collect(),
    }
}
