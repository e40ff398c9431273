//! Mistake-driven perceptron over constraint attributes, with the
//! training-time lambda trick and per-constraint update normalization.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{sign, EpochRecord, LearnedModel, ModelKind};
use crate::corpus::{Corpus, PatternCounts};
use crate::error::{Error, Result};
use crate::grammar::{
    candidate_violations, first_max_by, hg_winner, Constraint, InputPattern, ViolationVector, WeightVector,
    WordOrder, NUM_CONSTRAINTS,
};

#[derive(Clone, Debug, PartialEq)]
pub struct PerceptronConfig {
    pub epochs: usize,
    /// Step size of an update.
    pub learning_rate: f64,
    /// Bonus per past mistake added to the true label's training score.
    pub lambda_trick_rate: f64,
    pub init_seed: u64,
    /// Weights start uniform in `[low, high)`.
    pub init_range: (f64, f64),
    pub use_normalization: bool,
    pub reshuffle_each_epoch: bool,
}

impl Default for PerceptronConfig {
    fn default() -> Self {
        PerceptronConfig {
            epochs: 10,
            learning_rate: 1000.0,
            lambda_trick_rate: 30.0,
            init_seed: 0,
            init_range: (0.0, 10.0),
            use_normalization: true,
            reshuffle_each_epoch: false,
        }
    }
}

impl PerceptronConfig {
    /// The starting weights `perceptron_train` uses for this config.
    pub fn initial_weights(&self) -> WeightVector {
        draw_initial_weights(self, &mut ChaCha8Rng::seed_from_u64(self.init_seed))
    }

    fn validate(&self) -> Result<()> {
        let (lo, hi) = self.init_range;
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be at least 1".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config("learning rate must be positive".into()));
        }
        if !(self.lambda_trick_rate >= 0.0 && self.lambda_trick_rate.is_finite()) {
            return Err(Error::Config("lambda-trick rate must be non-negative".into()));
        }
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(Error::Config(format!("bad init range ({lo}, {hi})")));
        }
        Ok(())
    }
}

/// How often each training example has been misclassified.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct MistakeCounters(Vec<u32>);

impl MistakeCounters {
    pub fn new(n: usize) -> Self {
        MistakeCounters(vec![0; n])
    }

    pub fn get(&self, i: usize) -> u32 {
        self.0[i]
    }

    pub fn increment(&mut self, i: usize) {
        self.0[i] += 1;
    }

    pub fn total(&self) -> u64 {
        self.0.iter().map(|&c| u64::from(c)).sum()
    }
}

/// Number of training sentences in which each constraint is not vacuous.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NormalizationFactors(pub [f64; NUM_CONSTRAINTS]);

impl NormalizationFactors {
    pub fn get(&self, c: Constraint) -> f64 {
        self.0[c.index()]
    }
}

pub fn compute_normalization(train: &Corpus) -> Result<NormalizationFactors> {
    train.require_nonempty()?;
    let mut factors = [0.0; NUM_CONSTRAINTS];
    for s in train.iter() {
        let v = crate::grammar::evaluate_constraints(&s.input, s.observed);
        for (f, &x) in factors.iter_mut().zip(v.0.iter()) {
            if x != 0 {
                *f += 1.0;
            }
        }
    }
    Ok(NormalizationFactors(factors))
}

/// Moves each weight one step of `learning_rate` toward the true
/// candidate wherever the two attribute vectors differ. With factors, the
/// step for constraint `j` is divided by `factors[j]`; a zero factor
/// leaves that weight untouched.
pub fn perceptron_update(
    weights: &mut WeightVector,
    truth: &ViolationVector,
    predicted: &ViolationVector,
    learning_rate: f64,
    factors: Option<&NormalizationFactors>,
) {
    for j in 0..NUM_CONSTRAINTS {
        let d = truth.0[j] - predicted.0[j];
        if d == 0 {
            continue;
        }
        let step = learning_rate * sign(d);
        match factors {
            Some(f) if f.0[j] > 0.0 => weights.0[j] += step / f.0[j],
            Some(_) => {}
            None => weights.0[j] += step,
        }
    }
}

/// Candidate index chosen during training: harmony maximisation with
/// `bonus` added to the observed candidate's score. Ties go to the lower
/// index.
pub fn training_choice(
    weights: &WeightVector,
    cands: &[ViolationVector; WordOrder::COUNT],
    truth: usize,
    bonus: f64,
) -> usize {
    let scores = std::array::from_fn::<f64, { WordOrder::COUNT }, _>(|k| {
        weights.harmony(&cands[k]) + if k == truth { bonus } else { 0.0 }
    });
    first_max_by(&scores, |a, b| a.total_cmp(b))
}

fn draw_initial_weights(config: &PerceptronConfig, rng: &mut ChaCha8Rng) -> WeightVector {
    let (lo, hi) = config.init_range;
    WeightVector(std::array::from_fn(|_| if lo < hi { rng.random_range(lo..hi) } else { lo }))
}

/// Training accuracy of plain harmony maximisation.
pub(super) fn hg_accuracy(weights: &WeightVector, counts: &PatternCounts) -> f64 {
    let total = counts.total();
    if total == 0 {
        return 0.0;
    }
    let correct: u64 = InputPattern::all().map(|p| counts.get(&p, hg_winner(weights, &p))).sum();
    correct as f64 / total as f64
}

pub fn perceptron_train(train: &Corpus, config: &PerceptronConfig) -> Result<LearnedModel> {
    train.require_nonempty()?;
    config.validate()?;

    let mut rng = ChaCha8Rng::seed_from_u64(config.init_seed);
    let (lo, hi) = config.init_range;
    let mut weights = draw_initial_weights(config, &mut rng);

    let factors = config.use_normalization.then(|| compute_normalization(train)).transpose()?;
    let table: Vec<[ViolationVector; WordOrder::COUNT]> = InputPattern::all().map(|p| candidate_violations(&p)).collect();
    let counts = train.counts();

    let mut counters = MistakeCounters::new(train.len());
    let mut visit: Vec<usize> = (0..train.len()).collect();
    let mut history = Vec::with_capacity(config.epochs);

    for epoch in 1..=config.epochs {
        if config.reshuffle_each_epoch && epoch > 1 {
            visit.shuffle(&mut rng);
        }
        let mut mistakes = 0;
        for &i in &visit {
            let s = &train.sentences[i];
            let cands = &table[s.input.index()];
            let truth = s.observed.index();
            let bonus = config.lambda_trick_rate * f64::from(counters.get(i));
            let predicted = training_choice(&weights, cands, truth, bonus);
            if predicted != truth {
                mistakes += 1;
                counters.increment(i);
                perceptron_update(&mut weights, &cands[truth], &cands[predicted], config.learning_rate, factors.as_ref());
            }
        }
        history.push(EpochRecord { epoch, mistakes, train_accuracy: hg_accuracy(&weights, &counts) });
    }

    let mut model = LearnedModel::weighted(ModelKind::Hg, weights)
        .with_meta("learner", "perceptron")
        .with_meta("epochs", config.epochs)
        .with_meta("learning_rate", config.learning_rate)
        .with_meta("lambda_trick_rate", config.lambda_trick_rate)
        .with_meta("init_seed", config.init_seed)
        .with_meta("init_range", format!("{},{}", lo, hi))
        .with_meta("normalization", config.use_normalization)
        .with_meta("reshuffle", config.reshuffle_each_epoch)
        .with_meta("train_provenance", &train.provenance);
    if let Some(last) = history.last() {
        model = model
            .with_meta("final_epoch_mistakes", last.mistakes)
            .with_meta("final_train_accuracy", format!("{:.6}", last.train_accuracy));
    }
    model.history = history;
    Ok(model)
}
