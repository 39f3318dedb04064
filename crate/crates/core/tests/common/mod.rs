#![allow(dead_code)]

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use vocomp::corpus::{parse_tuple_file, select_candidates};
use vocomp::model::{AlphaMode, Model};
use vocomp::trainer::{
    backward, tuple_cost, GradientBuffer, Instance, NegativeSampler, NegativeSamples, SparseRows,
};

pub const FD_STEP: f64 = 1e-5;
pub const FD_MAX_REL_ERROR: f64 = 1e-6;
/// Relative errors are taken against `max(|analytic|, |numeric|, FLOOR)`, so
/// partials that are zero or vanishingly small are compared in absolute
/// terms at the level of finite-difference round-off.
pub const FD_REL_FLOOR: f64 = 1e-3;

/// Ten nouns, three verbs, two prepositions.
const GRADIENT_CORPUS: &str = "\
n0\tv0\tn1
n2\tv0\tn3
n4\tv1\tn5
n6\tv2\tn7
n8\tv1\tn9
n0\tv2\tn3
n2\tv1\tn1\tp0\tn4
n6\tv0\tn5\tp1\tn8
";

#[derive(Clone, Debug)]
pub struct FdReport {
    pub max_rel_error: f64,
    pub worst: String,
    pub checked: usize,
}

/// Model with randomized parameters, two observed tuples (one SVO, one
/// SVOPN) and their corruptions.
pub fn gradient_instance(seed: u64, mode: AlphaMode) -> (Model, Vec<(Instance, NegativeSamples)>) {
    let parsed = parse_tuple_file(GRADIENT_CORPUS.as_bytes()).unwrap();
    let mut lex = parsed.lexicon;
    lex.count_training(&parsed.corpus);
    assert_eq!(lex.nouns.len(), 10);
    let cands = select_candidates(&lex.counts, 0);
    let mut model = Model::new(lex, cands, 4, seed, mode);

    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let wide = Normal::new(0.0, 0.6).unwrap();
    let p = &mut model.params;
    for block in [
        p.nouns.data_mut(),
        p.predicates.data_mut(),
        p.phrases.data_mut(),
        &mut p.weights[..],
    ] {
        block.iter_mut().for_each(|x| *x = wide.sample(&mut rng));
    }

    let sampler = NegativeSampler::new(&model.lexicon, &parsed.corpus);
    let svo = parsed.corpus.svo[(seed % 6) as usize];
    let svopn = parsed.corpus.svopn[(seed % 2) as usize];
    let observed = [Instance::Svo(svo), Instance::Svopn(svopn)];
    let items = observed
        .into_iter()
        .map(|o| (o, sampler.sample(&o, &mut rng).unwrap()))
        .collect();
    (model, items)
}

fn total_cost(model: &Model, items: &[(Instance, NegativeSamples)]) -> f64 {
    items.iter().map(|(o, n)| tuple_cost(model, o, n)).sum()
}

#[derive(Clone, Copy)]
enum Block {
    Nouns,
    Predicates,
    Phrases,
    Weights,
}

fn slot(model: &mut Model, block: Block) -> &mut [f64] {
    let p = &mut model.params;
    match block {
        Block::Nouns => p.nouns.data_mut(),
        Block::Predicates => p.predicates.data_mut(),
        Block::Phrases => p.phrases.data_mut(),
        Block::Weights => &mut p.weights[..],
    }
}

fn analytic(rows: &SparseRows, i: usize) -> f64 {
    let w = rows.width();
    rows.row(i / w)[i % w]
}

/// Compare every analytic partial with a central finite difference.
pub fn finite_difference_check(seed: u64, mode: AlphaMode) -> FdReport {
    let (mut model, items) = gradient_instance(seed, mode);
    let mut buf = GradientBuffer::for_params(&model.params);
    for (o, n) in &items {
        backward(&model, o, n, &mut buf);
    }
    let mut report = FdReport {
        max_rel_error: 0.0,
        worst: String::new(),
        checked: 0,
    };
    let blocks = [
        (Block::Nouns, "nouns", &buf.nouns),
        (Block::Predicates, "predicates", &buf.predicates),
        (Block::Phrases, "phrases", &buf.phrases),
        (Block::Weights, "weights", &buf.weights),
    ];
    for (block, name, grads) in blocks {
        for i in 0..slot(&mut model, block).len() {
            let orig = slot(&mut model, block)[i];
            slot(&mut model, block)[i] = orig + FD_STEP;
            let plus = total_cost(&model, &items);
            slot(&mut model, block)[i] = orig - FD_STEP;
            let minus = total_cost(&model, &items);
            slot(&mut model, block)[i] = orig;
            let numeric = (plus - minus) / (2.0 * FD_STEP);
            let a = analytic(grads, i);
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(FD_REL_FLOOR);
            report.checked += 1;
            if rel > report.max_rel_error {
                report.max_rel_error = rel;
                report.worst = format!("{name}[{i}] analytic {a:e} numeric {numeric:e}");
            }
        }
    }
    report
}

/// Average rank of every element, counted directly: one plus the number of
/// smaller values plus half the number of other equal values.
pub fn brute_force_ranks(xs: &[f64]) -> Vec<f64> {
    xs.iter()
        .map(|&x| {
            let less = xs.iter().filter(|&&y| y < x).count() as f64;
            let equal = xs.iter().filter(|&&y| y == x).count() as f64;
            less + (equal + 1.0) / 2.0
        })
        .collect()
}

/// Spearman's rho as the Pearson correlation of brute-force average ranks;
/// `None` when either side is constant.
pub fn brute_force_spearman(x: &[f64], y: &[f64]) -> Option<f64> {
    let (rx, ry) = (brute_force_ranks(x), brute_force_ranks(y));
    let n = rx.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    (sxx > 0.0 && syy > 0.0).then(|| sxy / (sxx.sqrt() * syy.sqrt()))
}

/// Random paired lists of length 2..=30 drawn from a few levels, so ties
/// are common.
pub fn tied_lists(count: usize, seed: u64) -> Vec<(Vec<f64>, Vec<f64>)> {
    use rand::Rng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let n = rng.random_range(2..=30);
            let levels = rng.random_range(2..=8);
            let mut draw = || {
                (0..n)
                    .map(|_| rng.random_range(0..levels) as f64 * 0.5)
                    .collect()
            };
            (draw(), draw())
        })
        .collect()
}

/// Phrase, score from corpus (a), score from corpus (b), reported ensemble.
pub const ENSEMBLE_ROWS: [(&str, f64, f64, &str); 9] = [
    ("buy car", 0.78, 0.71, "0.74"),
    ("own land", 0.79, 0.73, "0.76"),
    ("take toll", 0.14, 0.11, "0.13"),
    ("shed light", 0.21, 0.07, "0.14"),
    ("bear fruit", 0.15, 0.19, "0.17"),
    ("make noise", 0.37, 0.33, "0.35"),
    ("have reason", 0.26, 0.39, "0.33"),
    ("smoke cigarette", 0.56, 0.90, "0.73"),
    ("catch eye", 0.48, 0.14, "0.31"),
];

/// Bivariate normal sample with Pearson correlation `r`.
pub fn correlated_sample(n: usize, r: f64, seed: u64) -> Vec<(f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let std = Normal::new(0.0, 1.0).unwrap();
    (0..n)
        .map(|_| {
            let a = std.sample(&mut rng);
            let b = std.sample(&mut rng);
            (a, r * a + (1.0 - r * r).sqrt() * b)
        })
        .collect()
}

/// Pearson correlation giving Spearman's `rho` for a bivariate normal.
pub fn pearson_for_spearman(rho: f64) -> f64 {
    2.0 * (std::f64::consts::PI * rho / 6.0).sin()
}
