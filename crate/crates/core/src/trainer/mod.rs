//! Negative-sampling training with mini-batch AdaGrad and early stopping.

mod adagrad;
mod grad;
mod negatives;

use std::io::Write;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::corpus::{select_candidates, Lexicon, Split, TupleCorpus};
use crate::error::{Error, Result};
use crate::model::{AlphaMode, Model, DEFAULT_DIM};

pub use adagrad::{adagrad_step, AdaGradState};
pub use grad::{
    backward, cost_from_scores, instance_score, tuple_cost, GradientBuffer, SparseRows,
};
pub use negatives::{Instance, NegativeSampler, NegativeSamples};

/// Learning rates searched by default.
pub const LEARNING_RATES: [f64; 5] = [0.01, 0.02, 0.03, 0.04, 0.05];
/// L2 coefficients on `W` searched by default.
pub const L2_COEFFICIENTS: [f64; 5] = [1e-3, 1e-4, 1e-5, 1e-6, 0.0];

/// When negatives are drawn for the training tuples.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum NegativePolicy {
    /// Fresh corruptions every epoch.
    #[default]
    PerEpoch,
    /// One draw per tuple for the whole run.
    Fixed,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub dim: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub l2: f64,
    /// Candidate threshold: pairs seen more than `k` times in training.
    pub k: u64,
    pub max_epochs: usize,
    pub seed: u64,
    pub negatives: NegativePolicy,
    pub alpha_mode: AlphaMode,
    /// Candidate phrases whose alpha is recorded after every epoch.
    pub track: Vec<(u32, u32)>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            dim: DEFAULT_DIM,
            batch_size: 100,
            learning_rate: 0.05,
            l2: 1e-6,
            k: 10,
            max_epochs: 30,
            seed: 1,
            negatives: NegativePolicy::PerEpoch,
            alpha_mode: AlphaMode::Learned,
            track: Vec::new(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::Config("dim must be at least 1".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be at least 1".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if !(self.l2 >= 0.0 && self.l2.is_finite()) {
            return Err(Error::Config(format!(
                "l2 must be non-negative, got {}",
                self.l2
            )));
        }
        if let AlphaMode::Fixed(a) = self.alpha_mode {
            if !(0.0..=1.0).contains(&a) {
                return Err(Error::Config(format!(
                    "fixed alpha must be in [0, 1], got {a}"
                )));
            }
        }
        Ok(())
    }
}

/// Held-out tuples with corruptions drawn once from a fixed seed.
#[derive(Clone, Debug)]
pub struct DevSet {
    pub items: Vec<(Instance, NegativeSamples)>,
}

impl DevSet {
    pub fn new(
        corpus: &TupleCorpus,
        sampler: &NegativeSampler,
        split: Split,
        seed: u64,
    ) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(2);
        let items = instances(corpus, split)
            .into_iter()
            .map(|inst| sampler.sample(&inst, &mut rng).map(|n| (inst, n)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { items })
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }
}

/// Tuples of one split as a single stream: SVO first, then SVOPN.
pub fn instances(corpus: &TupleCorpus, split: Split) -> Vec<Instance> {
    corpus
        .svo_in(split)
        .map(|&t| Instance::Svo(t))
        .chain(corpus.svopn_in(split).map(|&t| Instance::Svopn(t)))
        .collect()
}

/// Pseudo-disambiguation accuracy: the fraction of (tuple, corruption) pairs
/// where the observed tuple scores strictly higher.
pub fn dev_score(model: &Model, dev: &DevSet) -> Result<f64> {
    if dev.is_empty() {
        return Err(Error::Eval("empty development split".into()));
    }
    let mut wins = 0usize;
    for (obs, negs) in &dev.items {
        let s = instance_score(model, obs);
        wins += negs
            .0
            .iter()
            .filter(|n| s > instance_score(model, n))
            .count();
    }
    Ok(wins as f64 / (3 * dev.items.len()) as f64)
}

/// Mean negative-sampling cost over the dev tuples.
pub fn dev_cost(model: &Model, dev: &DevSet) -> f64 {
    if dev.is_empty() {
        return f64::NAN;
    }
    let total: f64 = dev.items.iter().map(|(o, n)| tuple_cost(model, o, n)).sum();
    total / dev.items.len() as f64
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_cost: f64,
    pub dev_score: f64,
    pub dev_cost: f64,
    pub mean_alpha: f64,
}

/// Alpha of each tracked phrase after every epoch (epoch 0 is the
/// initialization).
#[derive(Clone, Debug, Default, PartialEq)]
pub struct AlphaTrajectory {
    pub phrases: Vec<(u32, u32)>,
    pub epochs: Vec<Vec<f64>>,
}

impl AlphaTrajectory {
    /// `epoch\tphrase\talpha` lines.
    pub fn write_tsv<W: Write>(&self, lexicon: &Lexicon, mut out: W) -> Result<()> {
        for (epoch, alphas) in self.epochs.iter().enumerate() {
            for (&(v, o), a) in self.phrases.iter().zip(alphas) {
                writeln!(out, "{epoch}\t{}\t{a}", lexicon.phrase_label(v, o))?;
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    /// Parameters from the epoch with the best dev score.
    pub model: Model,
    pub log: Vec<EpochRecord>,
    pub best_epoch: usize,
    pub best_dev_score: f64,
    pub trajectory: AlphaTrajectory,
}

/// `epoch\ttrain_cost\tdev_score\tmean_alpha`, one line per epoch.
pub fn write_log<W: Write>(log: &[EpochRecord], mut out: W) -> Result<()> {
    for r in log {
        writeln!(
            out,
            "{}\t{}\t{}\t{}",
            r.epoch, r.train_cost, r.dev_score, r.mean_alpha
        )?;
    }
    Ok(())
}

/// Select candidates with `config.k` and initialize a model.
pub fn build_model(lexicon: &Lexicon, config: &TrainConfig) -> Model {
    let candidates = select_candidates(&lexicon.counts, config.k);
    Model::new(
        lexicon.clone(),
        candidates,
        config.dim,
        config.seed,
        config.alpha_mode,
    )
}

/// Build a model from `lexicon` (counts already taken on the training split)
/// and train it on `corpus`.
pub fn train(
    corpus: &TupleCorpus,
    lexicon: &Lexicon,
    config: &TrainConfig,
) -> Result<TrainOutcome> {
    config.validate()?;
    train_model(build_model(lexicon, config), corpus, config)
}

/// Train an initialized model. Stops at the first epoch whose dev score is
/// strictly lower than the previous one and returns the best snapshot.
pub fn train_model(
    mut model: Model,
    corpus: &TupleCorpus,
    config: &TrainConfig,
) -> Result<TrainOutcome> {
    config.validate()?;
    let track: Vec<u32> = config
        .track
        .iter()
        .filter_map(|&(v, o)| model.candidates.id(v, o))
        .collect();
    let mut trajectory = AlphaTrajectory {
        phrases: track.iter().map(|&p| model.candidates.phrase(p)).collect(),
        epochs: Vec::new(),
    };
    let record_alphas = |m: &Model, t: &mut AlphaTrajectory| {
        t.epochs
            .push(track.iter().map(|&p| m.candidate_alpha(p)).collect());
    };
    record_alphas(&model, &mut trajectory);

    if config.max_epochs == 0 {
        return Ok(TrainOutcome {
            model,
            log: Vec::new(),
            best_epoch: 0,
            best_dev_score: f64::NAN,
            trajectory,
        });
    }

    let sampler = NegativeSampler::new(&model.lexicon, corpus);
    let dev = DevSet::new(corpus, &sampler, Split::Dev, config.seed)?;
    if dev.is_empty() {
        return Err(Error::Eval("empty development split".into()));
    }
    let train_set = instances(corpus, Split::Train);
    if train_set.is_empty() {
        return Err(Error::Config("empty training split".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(1);
    let mut fixed_negs = match config.negatives {
        NegativePolicy::Fixed => Some(
            train_set
                .iter()
                .map(|t| sampler.sample(t, &mut rng))
                .collect::<Result<Vec<_>>>()?,
        ),
        NegativePolicy::PerEpoch => None,
    };

    let mut buf = GradientBuffer::for_params(&model.params);
    let mut state = AdaGradState::for_params(&model.params);
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut log = Vec::with_capacity(config.max_epochs);
    let mut best: Option<(usize, f64, Model)> = None;
    let mut prev_score = f64::NEG_INFINITY;

    for epoch in 1..=config.max_epochs {
        order.shuffle(&mut rng);
        let mut total_cost = 0.0;
        for batch in order.chunks(config.batch_size) {
            buf.clear();
            for &i in batch {
                let obs = &train_set[i];
                let negs = match fixed_negs.as_mut() {
                    Some(all) => all[i],
                    None => sampler.sample(obs, &mut rng)?,
                };
                total_cost += backward(&model, obs, &negs, &mut buf);
            }
            adagrad_step(
                &mut model.params,
                &buf,
                &mut state,
                config.learning_rate,
                config.l2,
                batch.len(),
            );
        }
        if let Some((block, row)) = model.params.first_non_finite() {
            return Err(Error::NonFinite { block, row, epoch });
        }

        let score = dev_score(&model, &dev)?;
        log.push(EpochRecord {
            epoch,
            train_cost: total_cost / train_set.len() as f64,
            dev_score: score,
            dev_cost: dev_cost(&model, &dev),
            mean_alpha: model.mean_candidate_alpha(),
        });
        record_alphas(&model, &mut trajectory);

        if best.as_ref().is_none_or(|(_, s, _)| score > *s) {
            best = Some((epoch, score, model.clone()));
        }
        if score < prev_score {
            break;
        }
        prev_score = score;
    }

    let (best_epoch, best_dev_score, model) = best.expect("at least one epoch ran");
    Ok(TrainOutcome {
        model,
        log,
        best_epoch,
        best_dev_score,
        trajectory,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridCell {
    pub learning_rate: f64,
    pub l2: f64,
    pub dev_score: f64,
    pub best_epoch: usize,
}

#[derive(Clone, Debug)]
pub struct GridResult {
    pub cells: Vec<GridCell>,
    /// Index into `cells` of the selected configuration.
    pub best: usize,
    pub best_outcome: TrainOutcome,
}

/// Train every (learning rate, l2) cell with early stopping and keep the
/// one with the highest dev score; ties go to the smaller l2, then the
/// smaller learning rate.
pub fn grid_search(
    corpus: &TupleCorpus,
    lexicon: &Lexicon,
    base: &TrainConfig,
    learning_rates: &[f64],
    l2s: &[f64],
) -> Result<GridResult> {
    if learning_rates.is_empty() || l2s.is_empty() {
        return Err(Error::Config("hyperparameter grid is empty".into()));
    }
    let mut cells = Vec::new();
    let mut best: Option<(usize, TrainOutcome)> = None;
    for &l2 in l2s {
        for &lr in learning_rates {
            let config = TrainConfig {
                learning_rate: lr,
                l2,
                ..base.clone()
            };
            let outcome = train(corpus, lexicon, &config)?;
            let cell = GridCell {
                learning_rate: lr,
                l2,
                dev_score: outcome.best_dev_score,
                best_epoch: outcome.best_epoch,
            };
            let better = match &best {
                None => true,
                Some((i, _)) => cell_beats(&cell, &cells[*i]),
            };
            cells.push(cell);
            if better {
                best = Some((cells.len() - 1, outcome));
            }
        }
    }
    let (best, best_outcome) = best.expect("grid is non-empty");
    Ok(GridResult {
        cells,
        best,
        best_outcome,
    })
}

fn cell_beats(a: &GridCell, b: &GridCell) -> bool {
    let score = |c: &GridCell| {
        if c.dev_score.is_nan() {
            f64::NEG_INFINITY
        } else {
            c.dev_score
        }
    };
    (score(a), -a.l2, -a.learning_rate) > (score(b), -b.l2, -b.learning_rate)
}
